//! Acceptance suite: one line per criterion with its time budget. Exits
//! nonzero when any criterion fails.

mod support;

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use juris_core::engine::{case_scenarios, parse_constraint};
use juris_core::explain::justification_tree;
use juris_core::ground::ground_program;
use juris_core::ilp::{cautious_learn, coverage, learn_optimal, search_optimal, space_for_task, CautiousOptions, IlpError, LearnReport};
use juris_core::kb::{detect_contradictions, facts_program, Kb, Maxim, Resolution};
use juris_core::solve::{cautious_entails, enumerate_stable_models};
use juris_core::syntax::{canonical_text, parse_atom, parse_learning_task, parse_program, parse_rule, Atom, Literal};
use juris_core::verify::{verify_case, Diagnosis, VerifyOptions};

type Check = fn() -> Result<String, String>;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn kb() -> Result<Kb, String> {
    Kb::load(&root().join("kb")).map_err(|e| e.to_string())
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn atoms(xs: &[&str]) -> Vec<Atom> {
    xs.iter().map(|x| parse_atom(x).unwrap()).collect()
}

const EARRINGS: [&str; 5] = [
    "own(\"Veronica\",\"earrings\")",
    "subtract(\"Giulio\",\"earrings\")",
    "snatch(\"Giulio\",\"earrings\")",
    "take_possession(\"Giulio\",\"earrings\")",
    "adherence(\"Veronica\",\"earrings\",4)",
];

fn choice_semantics() -> Result<String, String> {
    let gp = ground_program(&parse_program("1{p;q}2.").unwrap()).map_err(|e| e.to_string())?;
    let got: BTreeSet<String> = enumerate_stable_models(&gp, None).iter().map(|m| m.to_string()).collect();
    let want: BTreeSet<String> = ["p", "q", "p q"].map(String::from).into();
    ensure(got == want, format!("models {got:?}"))?;
    Ok("{p} {q} {p,q}".into())
}

fn solver_oracle() -> Result<String, String> {
    for seed in 0..500 {
        let mut rng = support::rng(seed);
        let src = support::random_ground_program(&mut rng, 12, 15);
        let p = parse_program(&src).map_err(|e| e.to_string())?;
        let mut got = enumerate_stable_models(&ground_program(&p).map_err(|e| e.to_string())?, None);
        got.sort();
        let want = support::oracle_models(&p).ok_or("oracle refused program")?;
        ensure(got == want, format!("seed {seed} differs"))?;
    }
    Ok("500 programs, 0 discrepancies".into())
}

fn tree_fixture() -> Result<String, String> {
    let src = std::fs::read_to_string(root().join("kb/fixtures/carlo_beatrice.lp")).map_err(|e| e.to_string())?;
    let gp = ground_program(&parse_program(&src).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let models = enumerate_stable_models(&gp, None);
    ensure(models.len() == 1, "fixture must have one model")?;
    let q = parse_atom("injuries(\"Carlo\",\"Beatrice\")").unwrap();
    let t = justification_tree(&gp, &models[0], &q).map_err(|e| e.to_string())?;
    let expected = "\
|__It is evident that Carlo (perpetrator) caused injuries to Beatrice (victim)
|  |__Carlo caused Beatrice to suffer skin lesion
|  |  |__skin lesion is an illness
|  |  |  |__skin lesion is a physical illness
|  |  |__Carlo caused skin lesion to Beatrice
|  |__Carlo had general intent to harm Beatrice
";
    ensure(t.render() == expected, format!("got:\n{}", t.render()))?;
    Ok("6 lines byte-exact".into())
}

fn robbery_classification() -> Result<String, String> {
    let kb = kb()?;
    let p = kb.program.merge(&facts_program("case", &atoms(&EARRINGS)))?;
    let gp = ground_program(&p).map_err(|e| e.to_string())?;
    let robbery: BTreeSet<Atom> = atoms(&["robbery(\"Giulio\",\"Veronica\")"]).into_iter().collect();
    let snatch: BTreeSet<Atom> = atoms(&["theft_snatch(\"Giulio\",\"Veronica\")"]).into_iter().collect();
    ensure(cautious_entails(&gp, &robbery, &snatch), "robbery not cautious or snatch theft present")?;
    Ok(format!("{} model(s), robbery in all, snatch theft in none", enumerate_stable_models(&gp, None).len()))
}

fn vagueness_counts() -> Result<String, String> {
    let kb = kb()?;
    let facts = atoms(&EARRINGS[..4]);
    let open = case_scenarios(&kb, &facts, &[]).map_err(|e| e.to_string())?.scenarios.len();
    let denial = parse_constraint(":- adherence(V,C,L), level(L), L < 2, subtracted_obj(C), victim(V).").map_err(|e| e.to_string())?;
    let pruned = case_scenarios(&kb, &facts, &[denial]).map_err(|e| e.to_string())?.scenarios.len();
    ensure(open == 4 && pruned == 3, format!("{open} then {pruned}"))?;
    Ok("4 scenarios, 3 after the evidence denial".into())
}

fn damage_task() -> Result<juris_core::syntax::LearningTaskSource, String> {
    let src = std::fs::read_to_string(root().join("kb/tasks/damage.task")).map_err(|e| e.to_string())?;
    parse_learning_task(&src).map_err(|e| e.to_string())
}

const DAMAGE: &str = "damage(R,V) :- R != V, agent(R), agent(V), slap(R,V).";

fn learner_fixture() -> Result<String, String> {
    let task = damage_task()?;
    let out = learn_optimal(&task).map_err(|e| e.to_string())?;
    let want = canonical_text(&parse_rule(DAMAGE).unwrap());
    ensure(out.hypothesis.texts() == [want.as_str()], format!("learned {}", out.hypothesis))?;
    ensure(out.hypothesis.total_length == 5, format!("length {}", out.hypothesis.total_length))?;
    Ok(format!("{want} (length 5, |S| = {})", out.space.len()))
}

fn learner_optimality() -> Result<String, String> {
    let mut solved = 0;
    for seed in 0..50u64 {
        let mut rng = support::rng(5000 + seed);
        let size = 1 + (seed as usize % 12);
        let t = support::random_learning_task(&mut rng, size, 6);
        let want = support::oracle_optimal(&t.background, &t.space, &t.examples);
        match (search_optimal(&t.background, &t.space, &t.examples), want) {
            (Ok((h, _)), Some(w)) => {
                ensure(h.total_length == w.total_length, format!("seed {seed}: {} vs {}", h.total_length, w.total_length))?;
                let cov = coverage(&t.background, &h, &t.examples).map_err(|e| e.to_string())?;
                ensure(cov.all_covered(), format!("seed {seed}: result does not cover"))?;
                solved += 1;
            }
            (Err(IlpError::Unsatisfiable), None) => {}
            (got, want) => return Err(format!("seed {seed}: learner {:?} vs oracle {:?}", got.map(|g| g.0.key().0), want.map(|w| w.total_length))),
        }
    }
    Ok(format!("50 tasks ({solved} satisfiable), 0 discrepancies"))
}

fn cautious_conformance() -> Result<String, String> {
    for seed in 0..20u64 {
        let mut rng = support::rng(9000 + seed);
        let t = support::random_learning_task(&mut rng, 1 + (seed as usize % 6), 0);
        let e_plus = support::random_atoms(&mut rng, 2);
        let e_minus = support::random_atoms(&mut rng, 1);
        let got = cautious_learn(&t.background, &t.space, &e_plus, &e_minus, CautiousOptions::default()).map_err(|e| e.to_string())?;
        let want = support::oracle_cautious(&t.background, &t.space, &e_plus, &e_minus);
        ensure(got.map(|h| h.key().1.join(" ")) == want.map(|h| h.key().1.join(" ")), format!("seed {seed} differs"))?;
    }
    Ok("20 tasks, 0 discrepancies".into())
}

fn contradiction_fixture() -> Result<String, String> {
    let kb = kb()?;
    let facts = atoms(&["cause(\"Offender\",\"Victim\",\"cervicalgia\")", "neck_pain(\"cervicalgia\")"]);
    let report = detect_contradictions(&kb, &facts_program("case", &facts)).map_err(|e| e.to_string())?;
    let f = report
        .findings
        .iter()
        .find(|f| f.atom == "contradiction(\"not illness\",\"illness\",\"cervicalgia\")")
        .ok_or("contradiction atom missing")?;
    let maxims: BTreeSet<Maxim> = f.applied_maxims.iter().copied().collect();
    ensure(f.resolution == Resolution::Unresolved, format!("{:?}", f.resolution))?;
    ensure(maxims == [Maxim::Superior, Maxim::Posterior].into(), format!("{maxims:?}"))?;
    Ok("unresolved, maxims {superior, posterior}".into())
}

fn corpus_gate() -> Result<String, String> {
    let kb = kb()?;
    for j in &kb.judgments {
        let r = verify_case(&kb.program, j, &kb.verdicts(), VerifyOptions::default()).map_err(|e| e.to_string())?;
        ensure(r.diagnosis == Diagnosis::Ok, r.to_string())?;
    }
    Ok(format!("{} of {} cases pass", kb.judgments.len(), kb.judgments.len()))
}

fn space_properties() -> Result<String, String> {
    let task = damage_task()?;
    let space = space_for_task(&task).map_err(|e| e.to_string())?;
    let want = canonical_text(&parse_rule(DAMAGE).unwrap());
    ensure(space.candidates.iter().any(|c| c.text == want), "target rule missing from space")?;
    for c in &space.candidates {
        let reflexive = c.rule.head_atoms().into_iter().chain(c.rule.body.iter().filter_map(Literal::atom)).any(|a| a.args.len() == 2 && a.args[0] == a.args[1]);
        ensure(!reflexive, format!("reflexive atom in {}", c.text))?;
        ensure(!c.rule.body.iter().any(|l| matches!(l, Literal::Neg(_))), format!("negation in {}", c.text))?;
    }
    let out = learn_optimal(&task).map_err(|e| e.to_string())?;
    let rows = out.report.rows();
    let names: Vec<&str> = rows.iter().map(|r| r.0).collect();
    ensure(names == LearnReport::STAGES, format!("{names:?}"))?;
    Ok(format!("|S| = {}, five stage rows: {}", space.len(), names.join(", ")))
}

struct Criterion {
    name: &'static str,
    budget: Duration,
    check: Check,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { name: "choice-rule semantics", budget: Duration::from_millis(100), check: choice_semantics },
        Criterion { name: "solver oracle equivalence", budget: Duration::from_secs(30), check: solver_oracle },
        Criterion { name: "justification-tree fixture", budget: Duration::from_millis(500), check: tree_fixture },
        Criterion { name: "robbery classification", budget: Duration::from_secs(1), check: robbery_classification },
        Criterion { name: "vagueness scenario count", budget: Duration::from_secs(1), check: vagueness_counts },
        Criterion { name: "learner fixture", budget: Duration::from_secs(60), check: learner_fixture },
        Criterion { name: "learner optimality oracle", budget: Duration::from_secs(120), check: learner_optimality },
        Criterion { name: "cautious learning conformance", budget: Duration::from_secs(30), check: cautious_conformance },
        Criterion { name: "contradiction fixture", budget: Duration::from_secs(1), check: contradiction_fixture },
        Criterion { name: "corpus gate", budget: Duration::from_secs(30), check: corpus_gate },
        Criterion { name: "learner stage report and space properties", budget: Duration::from_secs(60), check: space_properties },
    ];
    let mut failed = 0;
    for c in &criteria {
        let t = Instant::now();
        let result = (c.check)();
        let elapsed = t.elapsed();
        let (status, detail) = match result {
            Ok(d) if elapsed <= c.budget => ("PASS", d),
            Ok(d) => ("FAIL", format!("{d}; over budget")),
            Err(e) => ("FAIL", e),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("{status} {:<42} {:>9.3}s / {:>7.3}s  {detail}", c.name, elapsed.as_secs_f64(), c.budget.as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
