//! Subcommands of the `juris` binary. [`run`] writes to the given streams
//! and returns the process exit code.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use juris_core::engine::SolvedCase;
use juris_core::explain::{justification_tree, support_dag, DagFormat};
use juris_core::ground::ground_program;
use juris_core::ilp::{learn_optimal, IlpError};
use juris_core::kb::{lint_files, lint_kb, load_file, load_judgment, Kb};
use juris_core::syntax::{parse_atom, parse_learning_task, Program, Signature};
use juris_core::verify::{verify_case, RefinementReport, VerifyOptions};

use crate::service::{serve, Service};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_UNSAT: i32 = 3;
pub const EXIT_GATE: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "juris", version, about = "Answer-set reasoning over encoded criminal-code articles")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the stable models of the given programs (`.lp`) and case files (`.case`), one per line.
    Solve {
        files: Vec<PathBuf>,
        /// Stop after N models.
        #[arg(long)]
        models: Option<usize>,
        /// Keep only these atoms: `verdicts` for the KB manifest, or a
        /// comma-separated list of name/arity signatures.
        #[arg(long)]
        project: Option<String>,
        /// Print the ground program instead of solving.
        #[arg(long)]
        dump_ground: bool,
        /// Load this knowledge base in addition to the files.
        #[arg(long)]
        kb: Option<PathBuf>,
    },
    /// Explain why an atom holds in a stable model.
    Explain {
        files: Vec<PathBuf>,
        #[arg(long)]
        query: String,
        /// Print the justification tree (the default).
        #[arg(long, conflicts_with = "dag")]
        tree: bool,
        /// Print the support DAG.
        #[arg(long, value_enum)]
        dag: Option<DagArg>,
        /// Which stable model to explain, counting from 0.
        #[arg(long, default_value_t = 0)]
        model: usize,
        #[arg(long)]
        kb: Option<PathBuf>,
    },
    /// Learn an optimal hypothesis for a task file.
    Learn {
        task: PathBuf,
        /// Also print the stage timing report.
        #[arg(long)]
        report: bool,
    },
    /// Check judged cases against the knowledge base.
    Verify {
        /// Case files; defaults to every case shipped with the KB.
        cases: Vec<PathBuf>,
        #[arg(long, env = "KB_DIR", default_value = "kb")]
        kb: PathBuf,
        /// Emit JSON reports instead of the summary.
        #[arg(long)]
        json: bool,
        /// Also explore fact subsets missing up to this many facts.
        #[arg(long)]
        gap: Option<usize>,
        /// Skip the cumulative (prefix) consistency check.
        #[arg(long)]
        no_cumulative: bool,
    },
    /// Inspect the knowledge base.
    Kb {
        #[command(subcommand)]
        action: KbAction,
        #[arg(long, env = "KB_DIR", default_value = "kb", global = true)]
        kb: PathBuf,
    },
    /// Run the HTTP/JSON service.
    Serve {
        #[arg(long, env = "KB_DIR", default_value = "kb")]
        kb: PathBuf,
        #[arg(long, env = "PORT", default_value_t = 8080)]
        port: u16,
        /// Persist case sessions as JSON documents in this directory.
        #[arg(long, env = "JURIS_SNAPSHOTS")]
        snapshots: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum KbAction {
    /// List article sets and judgments.
    List,
    /// Check arity, naming and marker usage.
    Lint {
        /// Lint these files instead of the KB directory.
        files: Vec<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DagArg {
    Dot,
    Json,
}

/// An error with the exit code it maps to.
struct Failure {
    code: i32,
    error: anyhow::Error,
}

fn input<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure { code: EXIT_INPUT, error: e.into() }
}

pub fn run(args: impl IntoIterator<Item = impl Into<OsString> + Clone>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {:#}", f.error);
            f.code
        }
    }
}

fn load_programs(files: &[PathBuf], kb: Option<&Path>) -> Result<(Program, Option<Kb>), Failure> {
    let mut program = Program::default();
    let kb = match kb {
        Some(dir) => {
            let kb = Kb::load(dir).map_err(input)?;
            program = kb.program.clone();
            Some(kb)
        }
        None => None,
    };
    for f in files {
        // Case files contribute their facts; `#expect` lines are for `verify`.
        let p = if f.extension().is_some_and(|e| e == "case") {
            load_judgment(f, None).map_err(input)?.facts_program()
        } else {
            load_file(f).map_err(input)?
        };
        program.extend_renaming(p.rules);
    }
    Ok((program, kb))
}

fn projection(list: &str, kb: Option<&Kb>) -> Result<BTreeSet<Signature>, Failure> {
    if list == "verdicts" {
        let kb = kb.ok_or_else(|| Failure { code: EXIT_USAGE, error: anyhow!("--project verdicts needs --kb") })?;
        return Ok(kb.verdicts());
    }
    list.split(',')
        .map(|s| s.parse::<Signature>().map_err(|e| Failure { code: EXIT_USAGE, error: anyhow!(e) }))
        .collect()
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32, Failure> {
    match command {
        Command::Solve { files, models, project, dump_ground, kb } => {
            let (program, kb) = load_programs(&files, kb.as_deref())?;
            let gp = ground_program(&program).map_err(input)?;
            if dump_ground {
                write!(out, "{gp}").map_err(input)?;
                return Ok(0);
            }
            let keep = project.as_deref().map(|p| projection(p, kb.as_ref())).transpose()?;
            let solved = SolvedCase { models: juris_core::solve::enumerate_stable_models(&gp, models), ground: gp };
            if solved.models.is_empty() {
                writeln!(out, "UNSATISFIABLE").map_err(input)?;
            }
            for m in &solved.models {
                let m = match &keep {
                    Some(k) => m.project(|a| k.contains(&a.signature())),
                    None => m.clone(),
                };
                writeln!(out, "{m}").map_err(input)?;
            }
            Ok(0)
        }
        Command::Explain { files, query, tree: _, dag, model, kb } => {
            let (program, _) = load_programs(&files, kb.as_deref())?;
            let q = parse_atom(query.trim().trim_end_matches('.')).map_err(input)?;
            let gp = ground_program(&program).map_err(input)?;
            let models = juris_core::solve::enumerate_stable_models(&gp, Some(model + 1));
            let m = models.get(model).ok_or_else(|| input(anyhow!("the program has no stable model number {model}")))?;
            if !m.contains(&q) {
                return Err(input(anyhow!("{q} does not hold in stable model {model}")));
            }
            match dag {
                Some(format) => {
                    let full = support_dag(&gp, m).map_err(input)?;
                    let d = full.restricted_to(&q).expect("query is in the model");
                    let format = match format {
                        DagArg::Dot => DagFormat::Dot,
                        DagArg::Json => DagFormat::Json,
                    };
                    let text = d.export(format);
                    write!(out, "{text}").map_err(input)?;
                    if !text.ends_with('\n') {
                        writeln!(out).map_err(input)?;
                    }
                }
                None => {
                    let t = justification_tree(&gp, m, &q).map_err(input)?;
                    write!(out, "{}", t.render()).map_err(input)?;
                }
            }
            Ok(0)
        }
        Command::Learn { task, report } => {
            let src = std::fs::read_to_string(&task).with_context(|| format!("reading {}", task.display())).map_err(input)?;
            let t = parse_learning_task(&src).map_err(|e| input(anyhow!("{}: {e}", task.display())))?;
            match learn_optimal(&t) {
                Ok(o) => {
                    write!(out, "{}", o.hypothesis).map_err(input)?;
                    if report {
                        writeln!(out, "\n{}", o.report).map_err(input)?;
                    }
                    Ok(0)
                }
                Err(IlpError::Unsatisfiable) => Err(Failure { code: EXIT_UNSAT, error: anyhow!("no hypothesis in the space covers every example") }),
                Err(e) => Err(input(e)),
            }
        }
        Command::Verify { cases, kb, json, gap, no_cumulative } => {
            let kb = Kb::load(&kb).map_err(input)?;
            let records = if cases.is_empty() {
                kb.judgments.clone()
            } else {
                cases.iter().map(|c| load_judgment(c, None)).collect::<Result<Vec<_>, _>>().map_err(input)?
            };
            let opts = VerifyOptions { cumulative: !no_cumulative, subset_gap: gap };
            let reports: Vec<RefinementReport> = records
                .iter()
                .map(|j| verify_case(&kb.program, j, &kb.verdicts(), opts))
                .collect::<Result<_, _>>()
                .map_err(input)?;
            if json {
                writeln!(out, "{}", serde_json::to_string_pretty(&reports).expect("serializable")).map_err(input)?;
            } else {
                for r in &reports {
                    writeln!(out, "{r}").map_err(input)?;
                }
                let ok = reports.iter().filter(|r| r.passes()).count();
                writeln!(out, "{ok}/{} cases pass", reports.len()).map_err(input)?;
            }
            Ok(if reports.iter().all(RefinementReport::passes) { 0 } else { EXIT_GATE })
        }
        Command::Kb { action: KbAction::List, kb } => {
            let kb = Kb::load(&kb).map_err(input)?;
            for s in &kb.sets {
                writeln!(out, "{}: articles {} ({} rules)", s.id, s.articles.join(", "), s.program.len()).map_err(input)?;
            }
            for j in &kb.judgments {
                let learned = if j.learned_rules.is_empty() { String::new() } else { format!(", {} learned rule(s)", j.learned_rules.len()) };
                writeln!(out, "judgment {}: {}{learned}", j.id, j.citation).map_err(input)?;
            }
            Ok(0)
        }
        Command::Kb { action: KbAction::Lint { files }, kb } => {
            let report = if files.is_empty() {
                lint_kb(&Kb::load(&kb).map_err(input)?)
            } else {
                let named = files
                    .iter()
                    .map(|f| Ok((f.display().to_string(), load_file(f)?)))
                    .collect::<Result<Vec<_>, juris_core::kb::KbError>>()
                    .map_err(input)?;
                lint_files(&named)
            };
            for f in &report.findings {
                writeln!(out, "{f}").map_err(input)?;
            }
            if report.has_errors() {
                return Err(input(anyhow!("{} lint error(s)", report.errors().count())));
            }
            writeln!(out, "ok").map_err(input)?;
            Ok(0)
        }
        Command::Serve { kb, port, snapshots } => {
            let mut service = Service::new(Kb::load(&kb).map_err(input)?);
            if let Some(dir) = snapshots {
                service = service.with_snapshots(dir).map_err(input)?;
            }
            let rt = tokio::runtime::Runtime::new().map_err(input)?;
            rt.block_on(serve(Arc::new(service), port)).map_err(input)?;
            Ok(0)
        }
    }
}
