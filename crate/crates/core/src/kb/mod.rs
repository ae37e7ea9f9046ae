//! The legal knowledge base: article sets, the judgment corpus, learned
//! rules with provenance markers, linting and contradiction handling.

mod contradiction;
mod lint;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use contradiction::{
    attribute, detect_contradictions, findings_in_model, resolve_priority, ContradictionFinding, ContradictionReport, Maxim, Resolution, SourceRef,
};
pub use lint::{lint_files, lint_kb, marker_reachability, LintFinding, LintReport, Severity};

use crate::syntax::{
    parse_atom, parse_program_named, Atom, ChoiceElement, ChoiceHead, Head, Origin, ParseError, Program, Rule,
    Signature, Term,
};

pub const MARKER: &str = "using_judgment";

#[derive(Debug, Error)]
pub enum KbError {
    #[error("{path}: {error}")]
    Io { path: PathBuf, error: std::io::Error },
    #[error("{path}: {error}")]
    Parse { path: PathBuf, error: ParseError },
    #[error("{path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("duplicate rule id `{0}` across knowledge-base files")]
    DuplicateId(String),
    #[error("{path}: {message}")]
    Case { path: PathBuf, message: String },
    #[error("{path}: {message}")]
    Judgment { path: PathBuf, message: String },
    #[error("learned rule must be a normal rule, got `{0}`")]
    NotNormalRule(String),
    #[error("learned rule `{rule}` has unsafe variable `{variable}`")]
    UnsafeRule { rule: String, variable: String },
    #[error("marker id `{slug}` of judgment `{judgment}` is already used by another judgment")]
    MarkerCollision { slug: String, judgment: String },
    #[error("{0}")]
    Solve(String),
}

fn read(path: &Path) -> Result<String, KbError> {
    fs::read_to_string(path).map_err(|error| KbError::Io { path: path.to_path_buf(), error })
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Parses one `.lp` file; rule ids default to `<file stem>:<line>`.
pub fn load_file(path: &Path) -> Result<Program, KbError> {
    let src = read(path)?;
    parse_program_named(&stem(path), &src).map_err(|error| KbError::Parse { path: path.to_path_buf(), error })
}

/// Merges the given files into one program. Rule ids must be unique.
pub fn load_kb<P: AsRef<Path>>(paths: &[P]) -> Result<Program, KbError> {
    let mut out = Program::default();
    for p in paths {
        let prog = load_file(p.as_ref())?;
        out = out.merge(&prog).map_err(KbError::DuplicateId)?;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArticleEntry {
    pub number: String,
    pub file: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArticleSetEntry {
    pub id: String,
    pub articles: Vec<ArticleEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(default)]
    pub shared: Vec<String>,
    #[serde(default)]
    pub verdicts: Vec<String>,
    #[serde(default)]
    pub sets: Vec<ArticleSetEntry>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, KbError> {
        let text = read(path)?;
        let m: Manifest =
            toml::from_str(&text).map_err(|e| KbError::Manifest { path: path.to_path_buf(), message: e.to_string() })?;
        for v in &m.verdicts {
            v.parse::<Signature>().map_err(|e| KbError::Manifest {
                path: path.to_path_buf(),
                message: format!("bad verdict signature `{v}`: {e}"),
            })?;
        }
        Ok(m)
    }

    pub fn verdict_signatures(&self) -> BTreeSet<Signature> {
        self.verdicts.iter().filter_map(|v| v.parse().ok()).collect()
    }

    /// Article number for a file stem such as `art624bis`.
    pub fn article_of_stem(&self, stem: &str) -> Option<&str> {
        self.sets
            .iter()
            .flat_map(|s| &s.articles)
            .find(|a| Path::new(&a.file).file_stem().is_some_and(|s| s == stem))
            .map(|a| a.number.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArticleSet {
    pub id: String,
    pub articles: Vec<String>,
    pub program: Program,
}

/// Court levels: 1 first instance, 2 appeal, 3 cassation.
pub fn court_level_from_citation(citation: &str) -> Option<u8> {
    let c = citation.trim().to_lowercase();
    if c.starts_with("cassazione") || c.starts_with("corte di cassazione") {
        Some(3)
    } else if c.starts_with("corte d'appello") || c.starts_with("corte di appello") || c.starts_with("appello") {
        Some(2)
    } else if c.starts_with("tribunale") {
        Some(1)
    } else {
        None
    }
}

fn citation_date(citation: &str) -> Option<NaiveDate> {
    citation
        .split(|c: char| c == ',' || c.is_whitespace())
        .find_map(|tok| NaiveDate::parse_from_str(tok, "%d/%m/%Y").ok())
}

/// Lowercase citation with runs of non-alphanumerics collapsed to `_`.
pub fn citation_slug(citation: &str) -> String {
    let mut s = String::new();
    for c in citation.chars().flat_map(char::to_lowercase) {
        if c.is_ascii_alphanumeric() {
            s.push(c);
        } else if !s.ends_with('_') {
            s.push('_');
        }
    }
    let s = s.trim_matches('_').to_string();
    if s.starts_with(|c: char| c.is_ascii_lowercase()) {
        s
    } else {
        format!("j_{s}")
    }
}

/// Sidecar metadata of a case file.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct JudgmentMeta {
    pub citation: String,
    #[serde(default)]
    pub court_level: Option<u8>,
    #[serde(default)]
    pub date: Option<String>,
    #[serde(default)]
    pub specific_over: Vec<String>,
    #[serde(default)]
    pub illustrative: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct JudgmentRecord {
    /// File stem of the case.
    pub id: String,
    pub citation: String,
    pub court_level: Option<u8>,
    pub date: Option<NaiveDate>,
    /// Judgment ids or rule ids this ruling is declared more specific than.
    pub specific_over: Vec<String>,
    pub illustrative: bool,
    pub facts: Vec<Atom>,
    pub expected: Vec<Atom>,
    pub learned_rules: Vec<Rule>,
}

impl JudgmentRecord {
    pub fn marker_slug(&self) -> String {
        citation_slug(&self.citation)
    }

    pub fn marker(&self) -> Atom {
        Atom::new(MARKER, vec![Term::sym(self.marker_slug())])
    }

    pub fn facts_program(&self) -> Program {
        facts_program(&self.id, &self.facts)
    }

    /// Validates and attaches sidecar metadata.
    pub fn with_meta(mut self, meta: JudgmentMeta, path: &Path) -> Result<Self, KbError> {
        let bad = |message: String| KbError::Judgment { path: path.to_path_buf(), message };
        if meta.citation.trim().is_empty() {
            return Err(bad("missing citation".into()));
        }
        let from_prefix = court_level_from_citation(&meta.citation);
        if let Some(l) = meta.court_level {
            if !(1..=3).contains(&l) {
                return Err(bad(format!("court level {l} outside 1..3")));
            }
            if from_prefix.is_some_and(|p| p != l) {
                return Err(bad(format!("court level {l} does not match citation `{}`", meta.citation)));
            }
        }
        let date = match &meta.date {
            Some(d) => Some(
                NaiveDate::parse_from_str(d, "%Y-%m-%d").map_err(|e| bad(format!("date `{d}`: {e}")))?,
            ),
            None => None,
        };
        if let (Some(d), Some(c)) = (date, citation_date(&meta.citation)) {
            if d != c {
                return Err(bad(format!("date {d} differs from the citation date {c}")));
            }
        }
        self.citation = meta.citation;
        self.court_level = meta.court_level.or(from_prefix);
        self.date = date;
        self.specific_over = meta.specific_over;
        self.illustrative = meta.illustrative;
        Ok(self)
    }
}

/// Ground facts as a program with ids `<name>:fact<i>`.
pub fn facts_program(name: &str, facts: &[Atom]) -> Program {
    Program::new(
        facts
            .iter()
            .enumerate()
            .map(|(i, a)| Rule::new(format!("{name}:fact{i}"), Head::Atom(a.clone()), Vec::new()))
            .collect(),
    )
}

/// Parses a `.case` file: ground facts plus `#expect atom.` lines.
pub fn parse_case(id: &str, src: &str) -> Result<(Vec<Atom>, Vec<Atom>), String> {
    let mut program = String::new();
    let mut expected = Vec::new();
    for (n, line) in src.lines().enumerate() {
        match line.trim_start().strip_prefix("#expect") {
            Some(rest) => {
                expected.push(parse_atom(rest.trim()).map_err(|e| format!("line {}: {e}", n + 1))?);
                program.push('\n');
            }
            None => {
                program.push_str(line);
                program.push('\n');
            }
        }
    }
    let prog = parse_program_named(id, &program).map_err(|e| e.to_string())?;
    let mut facts = Vec::new();
    for r in prog.rules {
        match (&r.head, r.body.is_empty()) {
            (Head::Atom(a), true) => facts.push(a.clone()),
            _ => return Err(format!("rule `{}` is not a ground fact", r.id)),
        }
    }
    Ok((facts, expected))
}

/// Loads `<dir>/<stem>.case`, its `.json` sidecar and `learned/<stem>.lp`
/// from the knowledge-base root if present.
pub fn load_judgment(case_path: &Path, learned_dir: Option<&Path>) -> Result<JudgmentRecord, KbError> {
    let id = stem(case_path);
    let src = read(case_path)?;
    let (facts, expected) =
        parse_case(&id, &src).map_err(|message| KbError::Case { path: case_path.to_path_buf(), message })?;
    let mut record = JudgmentRecord { id: id.clone(), facts, expected, ..Default::default() };
    let sidecar = case_path.with_extension("json");
    if sidecar.exists() {
        let meta: JudgmentMeta = serde_json::from_str(&read(&sidecar)?)
            .map_err(|e| KbError::Judgment { path: sidecar.clone(), message: e.to_string() })?;
        record = record.with_meta(meta, &sidecar)?;
    } else {
        record.citation = id.clone();
    }
    if let Some(dir) = learned_dir {
        let learned = dir.join(format!("{id}.lp"));
        if learned.exists() {
            record.learned_rules = load_file(&learned)?.rules;
        }
    }
    Ok(record)
}

/// Installs `h :- body` as `2 {h; using_judgment(id)} 2 :- body.` so the
/// marker holds exactly when the learned conclusion fires.
pub fn integrate_learned_rule(kb: &Program, rule: &Rule, judgment: &JudgmentRecord) -> Result<Program, KbError> {
    let Head::Atom(head) = &rule.head else {
        return Err(KbError::NotNormalRule(rule.to_string()));
    };
    if let Some(variable) = rule.unsafe_variable() {
        return Err(KbError::UnsafeRule { rule: rule.to_string(), variable });
    }
    let marker = judgment.marker();
    let prefix = format!("{}/", judgment.id);
    for r in &kb.rules {
        let uses = r.head_atoms().into_iter().any(|a| *a == marker);
        if uses && !r.id.starts_with(&prefix) {
            return Err(KbError::MarkerCollision { slug: judgment.marker_slug(), judgment: judgment.id.clone() });
        }
    }
    let k = kb.rules.iter().filter(|r| r.id.starts_with(&prefix)).count();
    let head = Head::Choice(ChoiceHead {
        lower: 2,
        upper: Some(2),
        elements: vec![
            ChoiceElement { atom: head.clone(), condition: Vec::new() },
            ChoiceElement { atom: marker, condition: Vec::new() },
        ],
    });
    let mut installed = Rule::new(format!("{prefix}learned:{}", k + 1), head, rule.body.clone());
    installed.annotation = rule.annotation.clone();
    installed.origin = Origin::LearnedJudgment;
    installed.specific_over = rule.specific_over.clone();
    let mut out = kb.clone();
    out.rules.push(installed);
    Ok(out)
}

/// A loaded knowledge-base directory.
#[derive(Clone, Debug, Default)]
pub struct Kb {
    pub root: PathBuf,
    pub manifest: Manifest,
    pub sets: Vec<ArticleSet>,
    /// Shared files, keyed by stem.
    pub shared: BTreeMap<String, Program>,
    pub judgments: Vec<JudgmentRecord>,
    /// Articles, shared files and integrated learned rules.
    pub program: Program,
}

impl Kb {
    pub fn load(root: &Path) -> Result<Kb, KbError> {
        let manifest = Manifest::load(&root.join("manifest.toml"))?;
        let articles = root.join("articles");
        let mut program = Program::default();
        let mut shared = BTreeMap::new();
        for f in &manifest.shared {
            let p = load_file(&articles.join(f))?;
            program = program.merge(&p).map_err(KbError::DuplicateId)?;
            shared.insert(stem(Path::new(f)), p);
        }
        let mut sets = Vec::new();
        for s in &manifest.sets {
            let paths: Vec<PathBuf> = s.articles.iter().map(|a| articles.join(&a.file)).collect();
            let p = load_kb(&paths)?;
            program = program.merge(&p).map_err(KbError::DuplicateId)?;
            sets.push(ArticleSet {
                id: s.id.clone(),
                articles: s.articles.iter().map(|a| a.number.clone()).collect(),
                program: p,
            });
        }
        let mut judgments = Vec::new();
        let jdir = root.join("judgments");
        if jdir.is_dir() {
            let mut cases: Vec<PathBuf> = fs::read_dir(&jdir)
                .map_err(|error| KbError::Io { path: jdir.clone(), error })?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|e| e == "case"))
                .collect();
            cases.sort();
            let learned = root.join("learned");
            for c in cases {
                judgments.push(load_judgment(&c, Some(&learned))?);
            }
        }
        let mut seen_slugs: BTreeMap<String, String> = BTreeMap::new();
        for j in &judgments {
            if let Some(other) = seen_slugs.insert(j.marker_slug(), j.id.clone()) {
                if !j.learned_rules.is_empty() {
                    return Err(KbError::MarkerCollision { slug: j.marker_slug(), judgment: other });
                }
            }
            for r in &j.learned_rules {
                program = integrate_learned_rule(&program, r, j)?;
            }
        }
        Ok(Kb { root: root.to_path_buf(), manifest, sets, shared, judgments, program })
    }

    pub fn verdicts(&self) -> BTreeSet<Signature> {
        self.manifest.verdict_signatures()
    }

    pub fn judgment(&self, id: &str) -> Option<&JudgmentRecord> {
        self.judgments.iter().find(|j| j.id == id)
    }

    pub fn judgment_by_marker(&self, slug: &str) -> Option<&JudgmentRecord> {
        self.judgments.iter().find(|j| j.marker_slug() == slug)
    }

    /// Article number of a rule id such as `art624bis:7`.
    pub fn article_of_rule(&self, rule_id: &str) -> Option<&str> {
        self.manifest.article_of_stem(rule_id.split(':').next()?)
    }

    /// One article set plus the shared files.
    pub fn set_program(&self, id: &str) -> Option<Program> {
        let set = self.sets.iter().find(|s| s.id == id)?;
        let mut p = Program::default();
        for s in self.shared.values() {
            p = p.merge(s).ok()?;
        }
        p.merge(&set.program).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground::ground_program;
    use crate::solve::enumerate_stable_models;
    use crate::syntax::{parse_program, parse_rule};

    #[test]
    fn slugs() {
        assert_eq!(
            citation_slug("Tribunale Bari sez. I, 26/08/2022, n. 3684"),
            "tribunale_bari_sez_i_26_08_2022_n_3684"
        );
        assert_eq!(citation_slug("2020 ruling"), "j_2020_ruling");
    }

    #[test]
    fn court_levels() {
        assert_eq!(court_level_from_citation("Cassazione penale sez. II, 12/03/2008, n. 15420"), Some(3));
        assert_eq!(court_level_from_citation("Tribunale Nocera Inferiore, 23/06/2020, n. 551"), Some(1));
        assert_eq!(court_level_from_citation("Corte d'Appello di Roma, 1/1/2020"), Some(2));
    }

    #[test]
    fn sidecar_validation() {
        let meta = JudgmentMeta {
            citation: "Cassazione penale sez. II, 12/03/2008, n. 15420".into(),
            court_level: Some(1),
            date: Some("2008-03-12".into()),
            ..Default::default()
        };
        assert!(JudgmentRecord::default().with_meta(meta.clone(), Path::new("x.json")).is_err());
        let wrong_date = JudgmentMeta { court_level: Some(3), date: Some("2008-03-13".into()), ..meta.clone() };
        assert!(JudgmentRecord::default().with_meta(wrong_date, Path::new("x.json")).is_err());
        let ok = JudgmentMeta { court_level: Some(3), ..meta };
        let r = JudgmentRecord::default().with_meta(ok, Path::new("x.json")).unwrap();
        assert_eq!(r.date, NaiveDate::from_ymd_opt(2008, 3, 12));
    }

    #[test]
    fn case_parsing() {
        let (facts, expected) = parse_case("c", "p(a).\n#expect q(a).\nr(\"x\").").unwrap();
        assert_eq!(facts.len(), 2);
        assert_eq!(expected, vec![parse_atom("q(a)").unwrap()]);
        assert!(parse_case("c", "p(X) :- q(X).").is_err());
    }

    fn judgment(id: &str, citation: &str) -> JudgmentRecord {
        JudgmentRecord { id: id.into(), citation: citation.into(), ..Default::default() }
    }

    #[test]
    fn learned_rule_fires_with_marker() {
        let kb = Program::default();
        let rule = parse_rule("damage(R,V) :- R != V, agent(R), agent(V), slap(R,V).").unwrap();
        let kb = integrate_learned_rule(&kb, &rule, &judgment("slap", "Tribunale X, 1/1/2020")).unwrap();
        assert_eq!(kb.rules[0].origin, Origin::LearnedJudgment);
        let case = parse_program("agent(r). agent(v). slap(r,v).").unwrap();
        let gp = ground_program(&kb.merge(&case).unwrap()).unwrap();
        let models = enumerate_stable_models(&gp, None);
        assert_eq!(models.len(), 1);
        assert!(models[0].contains(&parse_atom("damage(r,v)").unwrap()));
        assert!(models[0].contains(&parse_atom("using_judgment(tribunale_x_1_1_2020)").unwrap()));

        let idle = parse_program("agent(r). agent(v).").unwrap();
        let gp = ground_program(&kb.merge(&idle).unwrap()).unwrap();
        let m = &enumerate_stable_models(&gp, None)[0];
        assert!(m.atoms().iter().all(|a| a.predicate != "damage" && a.predicate != MARKER));
    }

    #[test]
    fn distinct_judgments_get_distinct_markers() {
        let r1 = parse_rule("h(X) :- a(X).").unwrap();
        let r2 = parse_rule("h(X) :- b(X).").unwrap();
        let kb = integrate_learned_rule(&Program::default(), &r1, &judgment("j1", "Tribunale A, 1/1/2020")).unwrap();
        let kb = integrate_learned_rule(&kb, &r2, &judgment("j2", "Tribunale B, 1/1/2021")).unwrap();
        let gp = ground_program(&kb.merge(&parse_program("a(1). b(1).").unwrap()).unwrap()).unwrap();
        let m = &enumerate_stable_models(&gp, None)[0];
        assert_eq!(m.atoms().iter().filter(|a| a.predicate == MARKER).count(), 2);
    }

    #[test]
    fn marker_collision() {
        let r = parse_rule("h(X) :- a(X).").unwrap();
        let kb = integrate_learned_rule(&Program::default(), &r, &judgment("j1", "Tribunale A")).unwrap();
        let err = integrate_learned_rule(&kb, &r, &judgment("j2", "Tribunale A")).unwrap_err();
        assert!(matches!(err, KbError::MarkerCollision { .. }));
    }

    #[test]
    fn rejects_denials_as_learned_rules() {
        let r = parse_rule(":- a(X).").unwrap();
        assert!(integrate_learned_rule(&Program::default(), &r, &judgment("j", "c")).is_err());
    }

    #[test]
    fn empty_path_list() {
        let paths: [&Path; 0] = [];
        assert!(load_kb(&paths).unwrap().is_empty());
    }
}
