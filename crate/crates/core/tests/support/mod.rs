//! Seeded random programs and learning tasks, plus brute-force oracles,
//! shared by the property tests and the acceptance suite.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use juris_core::ground::ground_program;
use juris_core::ilp::{Hypothesis, HypothesisSpace};
use juris_core::solve::{exhaustive_models, StableModel};
use juris_core::syntax::{parse_program, parse_rule, Atom, Head, Literal, Polarity, Program, Rule, Term};
use juris_core::syntax::ExampleSource;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn body_text(rng: &mut ChaCha8Rng, atoms: &[String], len: usize) -> Vec<String> {
    (0..len)
        .map(|_| {
            let a = atoms.choose(rng).unwrap();
            if rng.gen_bool(0.35) {
                format!("not {a}")
            } else {
                a.clone()
            }
        })
        .collect()
}

fn with_body(head: String, body: &[String]) -> String {
    match (head.is_empty(), body.is_empty()) {
        (_, true) => format!("{head}."),
        (true, false) => format!(":- {}.", body.join(", ")),
        (false, false) => format!("{head} :- {}.", body.join(", ")),
    }
}

/// A propositional program with at most `max_atoms` atoms and `max_rules`
/// rules mixing facts, normal rules, bounded choices and denials.
pub fn random_ground_program(rng: &mut ChaCha8Rng, max_atoms: usize, max_rules: usize) -> String {
    let n = rng.gen_range(1..=max_atoms);
    let atoms: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
    let rules = rng.gen_range(1..=max_rules);
    let mut out = Vec::new();
    for _ in 0..rules {
        let blen = rng.gen_range(0..=3);
        let body = body_text(rng, &atoms, blen);
        let line = match rng.gen_range(0..10) {
            0..=4 => with_body(atoms.choose(rng).unwrap().clone(), &body),
            5..=7 => {
                let k = rng.gen_range(1..=3.min(n));
                let elems: Vec<String> = atoms.choose_multiple(rng, k).cloned().collect();
                let lo = rng.gen_range(0..=k);
                let lower = if rng.gen_bool(0.5) { lo.to_string() } else { String::new() };
                let upper = if rng.gen_bool(0.5) { rng.gen_range(lo..=k).to_string() } else { String::new() };
                with_body(format!("{lower}{{{}}}{upper}", elems.join("; ")), &body)
            }
            _ => {
                let body = if body.is_empty() { body_text(rng, &atoms, 1) } else { body };
                with_body(String::new(), &body)
            }
        };
        out.push(line);
    }
    out.join("\n")
}

const CONSTS: [&str; 3] = ["a", "b", "c"];
const VARS: [&str; 3] = ["X", "Y", "Z"];

fn rand_atom(rng: &mut ChaCha8Rng, preds: &[(&str, usize)], vars: &[&str]) -> String {
    let (p, arity) = *preds.choose(rng).unwrap();
    let args: Vec<&str> = (0..arity).map(|_| *vars.choose(rng).unwrap()).collect();
    format!("{p}({})", args.join(","))
}

/// A safe non-ground program over `e/2`, `n/1`, `q/1`, `r/2` with
/// negation, comparisons, choices and denials.
pub fn random_nonground_program(rng: &mut ChaCha8Rng) -> String {
    let edb = [("e", 2), ("n", 1)];
    let idb = [("q", 1), ("r", 2)];
    let all = [("e", 2), ("n", 1), ("q", 1), ("r", 2)];
    let mut out = Vec::new();
    for _ in 0..rng.gen_range(1..=5) {
        let (p, arity) = *edb.choose(rng).unwrap();
        let args: Vec<&str> = (0..arity).map(|_| *CONSTS.choose(rng).unwrap()).collect();
        out.push(format!("{p}({})." , args.join(",")));
    }
    for _ in 0..rng.gen_range(1..=5) {
        let npos = rng.gen_range(1..=2);
        let pos: Vec<String> = (0..npos).map(|_| rand_atom(rng, &all, &VARS)).collect();
        let bound: BTreeSet<&str> = VARS.iter().copied().filter(|v| pos.iter().any(|a| a.contains(v))).collect();
        let bound: Vec<&str> = bound.into_iter().collect();
        let mut body = pos.clone();
        if rng.gen_bool(0.4) {
            body.push(format!("not {}", rand_atom(rng, &all, &bound)));
        }
        if rng.gen_bool(0.3) {
            let op = ["!=", "<", "=", ">="].choose(rng).unwrap();
            let l = bound.choose(rng).unwrap();
            let r = if rng.gen_bool(0.5) { bound.choose(rng).unwrap().to_string() } else { CONSTS.choose(rng).unwrap().to_string() };
            body.push(format!("{l} {op} {r}"));
        }
        let line = match rng.gen_range(0..6) {
            0 => format!(":- {}.", body.join(", ")),
            1 => format!("{{{}}} :- {}.", rand_atom(rng, &idb, &bound), body.join(", ")),
            _ => format!("{} :- {}.", rand_atom(rng, &idb, &bound), body.join(", ")),
        };
        out.push(line);
    }
    out.join("\n")
}

fn assignments(vars: &[String], universe: &[Term]) -> Vec<BTreeMap<String, Term>> {
    let mut out = vec![BTreeMap::new()];
    for v in vars {
        out = out
            .into_iter()
            .flat_map(|b| {
                universe.iter().map(move |t| {
                    let mut b = b.clone();
                    b.insert(v.clone(), t.clone());
                    b
                })
            })
            .collect();
    }
    out
}

fn constants(p: &Program) -> Vec<Term> {
    let mut out = BTreeSet::new();
    let mut add = |a: &Atom| out.extend(a.args.iter().filter(|t| !t.is_var()).cloned());
    for r in &p.rules {
        for a in r.head_atoms() {
            add(a);
        }
        for l in &r.body {
            if let Some(a) = l.atom() {
                add(a);
            }
        }
    }
    out.into_iter().collect()
}

/// Instantiates every rule over the whole universe, with no derivability
/// pruning, and evaluates comparisons.
pub fn naive_instantiation(p: &Program) -> Program {
    let universe = constants(p);
    let mut rules = Vec::new();
    for r in &p.rules {
        for b in assignments(&r.variables(), &universe) {
            let g = r.substitute(&b);
            let mut keep = true;
            let body: Vec<Literal> = g
                .body
                .into_iter()
                .filter(|l| match l {
                    Literal::Cmp { left, op, right } => {
                        keep &= op.eval(left, right);
                        false
                    }
                    _ => true,
                })
                .collect();
            if keep {
                let mut out = Rule::new(format!("{}#{}", r.id, rules.len()), g.head, body);
                out.origin = r.origin;
                rules.push(out);
            }
        }
    }
    Program::new(rules)
}

/// Stable models by checking every subset of the atoms; `None` when the
/// program has too many atoms.
pub fn oracle_models(p: &Program) -> Option<Vec<StableModel>> {
    exhaustive_models(&ground_program(p).ok()?)
}

pub fn oracle_brave(p: &Program, incl: &BTreeSet<Atom>, excl: &BTreeSet<Atom>) -> bool {
    oracle_models(p)
        .expect("small program")
        .iter()
        .any(|m| incl.iter().all(|a| m.contains(a)) && excl.iter().all(|a| !m.contains(a)))
}

fn merged(parts: &[&Program]) -> Program {
    let mut out = Program::default();
    for p in parts {
        out.extend_renaming(p.rules.iter().cloned());
    }
    out
}

pub fn oracle_covers(background: &Program, h: &Hypothesis, e: &ExampleSource) -> bool {
    let p = merged(&[background, &h.program(), &e.context]);
    let brave = oracle_brave(&p, &e.inclusions, &e.exclusions);
    match e.polarity {
        Polarity::Pos => brave,
        Polarity::Neg => !brave,
    }
}

/// Minimum-key covering subset found by walking every subset.
pub fn oracle_optimal(background: &Program, space: &HypothesisSpace, examples: &[ExampleSource]) -> Option<Hypothesis> {
    let mut best: Option<Hypothesis> = None;
    for mask in 0u32..(1 << space.len()) {
        let members: Vec<usize> = (0..space.len()).filter(|i| mask & (1 << i) != 0).collect();
        let h = space.hypothesis(&members);
        if best.as_ref().is_some_and(|b| h.key() >= b.key()) {
            continue;
        }
        if examples.iter().all(|e| oracle_covers(background, &h, e)) {
            best = Some(h);
        }
    }
    best
}

/// Smallest-key subset whose `B ∪ H` is consistent and whose models all
/// contain `e_plus` and avoid `e_minus`.
pub fn oracle_cautious(
    background: &Program,
    space: &HypothesisSpace,
    e_plus: &BTreeSet<Atom>,
    e_minus: &BTreeSet<Atom>,
) -> Option<Hypothesis> {
    let mut best: Option<Hypothesis> = None;
    for mask in 0u32..(1 << space.len()) {
        let members: Vec<usize> = (0..space.len()).filter(|i| mask & (1 << i) != 0).collect();
        let h = space.hypothesis(&members);
        if best.as_ref().is_some_and(|b| h.key() >= b.key()) {
            continue;
        }
        let models = oracle_models(&merged(&[background, &h.program()])).expect("small program");
        let ok = !models.is_empty()
            && models.iter().all(|m| e_plus.iter().all(|a| m.contains(a)) && e_minus.iter().all(|a| !m.contains(a)));
        if ok {
            best = Some(h);
        }
    }
    best
}

const LEARN_ATOMS: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

fn random_candidate(rng: &mut ChaCha8Rng) -> Rule {
    let head = LEARN_ATOMS.choose(rng).unwrap().to_string();
    let blen = rng.gen_range(0..=2);
    let body: Vec<String> = body_text(rng, &LEARN_ATOMS.map(String::from), blen)
        .into_iter()
        .filter(|l| !l.ends_with(&head) || l.starts_with("not"))
        .collect();
    parse_rule(&with_body(head, &body)).unwrap()
}

pub fn random_atoms(rng: &mut ChaCha8Rng, max: usize) -> BTreeSet<Atom> {
    let k = rng.gen_range(0..=max);
    LEARN_ATOMS.choose_multiple(rng, k).map(|a| Atom::prop(*a)).collect()
}

pub struct RandomTask {
    pub background: Program,
    pub space: HypothesisSpace,
    pub examples: Vec<ExampleSource>,
}

/// A propositional learning task with an explicit space of `space_size`
/// distinct candidates and up to `max_examples` examples.
pub fn random_learning_task(rng: &mut ChaCha8Rng, space_size: usize, max_examples: usize) -> RandomTask {
    let bg_src: Vec<String> = (0..rng.gen_range(0..=3))
        .map(|_| {
            let head = LEARN_ATOMS.choose(rng).unwrap().to_string();
            let blen = rng.gen_range(0..=1);
            let body = body_text(rng, &LEARN_ATOMS.map(String::from), blen);
            with_body(head, &body)
        })
        .collect();
    let background = parse_program(&bg_src.join("\n")).unwrap();
    let mut texts = BTreeSet::new();
    let mut rules = Vec::new();
    while rules.len() < space_size {
        let r = random_candidate(rng);
        if texts.insert(r.to_string()) {
            rules.push(r);
        }
    }
    let space = HypothesisSpace::explicit(rules);
    let examples = (0..rng.gen_range(0..=max_examples))
        .map(|_| {
            let polarity = if rng.gen_bool(0.7) { Polarity::Pos } else { Polarity::Neg };
            let ctx = if rng.gen_bool(0.4) {
                parse_program(&format!("{}.", LEARN_ATOMS.choose(rng).unwrap())).unwrap()
            } else {
                Program::default()
            };
            ExampleSource::new(polarity, random_atoms(rng, 2), random_atoms(rng, 1), ctx)
        })
        .collect();
    RandomTask { background, space, examples }
}

/// A rule that would be unsafe: a head variable absent from the body.
pub fn unsafe_rule(rng: &mut ChaCha8Rng) -> Rule {
    let v = VARS.choose(rng).unwrap();
    let w = VARS.iter().find(|w| *w != v).unwrap();
    let body = vec![Literal::Pos(Atom::new("n", vec![Term::var(*w)]))];
    let mut r = Rule::new("unsafe".to_string(), Head::Atom(Atom::new("q", vec![Term::var(*v)])), body);
    if rng.gen_bool(0.5) {
        r.head = Head::None;
        r.body.push(Literal::Neg(Atom::new("q", vec![Term::var(*v)])));
    }
    r
}
