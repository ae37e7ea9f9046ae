//! Stable-model computation over ground programs.
//!
//! Search assigns atoms in herbrand-base order, trying `false` before `true`,
//! with unit propagation over the program completion (rule bodies force
//! heads, unsupported atoms become false, denials and choice bounds prune).
//! Every total assignment is then checked against the reduct, so unfounded
//! loops that completion alone admits are rejected. Models therefore come out
//! in lexicographic order of their characteristic vectors.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ground::{AtomId, GroundHead, GroundProgram, GroundProgramBuilder};
use crate::syntax::{parse_atom, Atom, ParseError};

/// One answer set.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(into = "Vec<String>", try_from = "Vec<String>")]
pub struct StableModel {
    atoms: BTreeSet<Atom>,
}

impl StableModel {
    pub fn new(atoms: impl IntoIterator<Item = Atom>) -> Self {
        StableModel { atoms: atoms.into_iter().collect() }
    }

    fn from_ids(gp: &GroundProgram, ids: impl IntoIterator<Item = AtomId>) -> Self {
        StableModel::new(ids.into_iter().map(|i| gp.atom(i).clone()))
    }

    pub fn atoms(&self) -> &BTreeSet<Atom> {
        &self.atoms
    }

    pub fn contains(&self, a: &Atom) -> bool {
        self.atoms.contains(a)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Atom ids in `gp`; atoms outside its base are skipped.
    pub fn ids(&self, gp: &GroundProgram) -> BTreeSet<AtomId> {
        self.atoms.iter().filter_map(|a| gp.id_of(a)).collect()
    }

    /// Atoms whose predicate satisfies `keep`.
    pub fn project(&self, mut keep: impl FnMut(&Atom) -> bool) -> StableModel {
        StableModel::new(self.atoms.iter().filter(|a| keep(a)).cloned())
    }

    /// Parses one line of the text format.
    pub fn parse_line(line: &str) -> Result<Self, ParseError> {
        let mut atoms = BTreeSet::new();
        let mut depth = 0usize;
        let mut in_str = false;
        let mut escaped = false;
        let mut cur = String::new();
        for c in line.chars() {
            if in_str {
                cur.push(c);
                match (escaped, c) {
                    (false, '\\') => escaped = true,
                    (false, '"') => in_str = false,
                    _ => escaped = false,
                }
                continue;
            }
            match c {
                '"' => {
                    in_str = true;
                    cur.push(c);
                }
                '(' => {
                    depth += 1;
                    cur.push(c);
                }
                ')' => {
                    depth = depth.saturating_sub(1);
                    cur.push(c);
                }
                c if c.is_whitespace() && depth == 0 => {
                    if !cur.is_empty() {
                        atoms.insert(parse_atom(&cur)?);
                        cur.clear();
                    }
                }
                c => cur.push(c),
            }
        }
        if !cur.is_empty() {
            atoms.insert(parse_atom(&cur)?);
        }
        Ok(StableModel { atoms })
    }
}

/// Line format: atoms sorted and separated by single spaces.
impl fmt::Display for StableModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

impl From<StableModel> for Vec<String> {
    fn from(m: StableModel) -> Self {
        m.atoms.iter().map(|a| a.to_string()).collect()
    }
}

impl TryFrom<Vec<String>> for StableModel {
    type Error = ParseError;

    fn try_from(v: Vec<String>) -> Result<Self, Self::Error> {
        v.iter().map(|s| parse_atom(s)).collect::<Result<BTreeSet<_>, _>>().map(|atoms| StableModel { atoms })
    }
}

/// Reduct of `gp` relative to `candidate`: a definite program over the same
/// base. Normal rules blocked by a negated atom in the candidate are dropped
/// and the remaining negations deleted; an unblocked choice rule contributes
/// `a :- body+` for each of its elements in the candidate; denials contribute
/// nothing.
pub fn reduct(gp: &GroundProgram, candidate: &BTreeSet<AtomId>) -> GroundProgram {
    let mut b = GroundProgramBuilder::new();
    for a in gp.atoms() {
        b.atom(a.clone());
    }
    for r in gp.rules() {
        if r.neg.iter().any(|a| candidate.contains(a)) {
            continue;
        }
        match &r.head {
            GroundHead::Atom(h) => b.add(r.rule_id.clone(), GroundHead::Atom(*h), r.pos.clone(), Vec::new()),
            GroundHead::Choice { elements, .. } => {
                for e in elements.iter().filter(|e| candidate.contains(e)) {
                    b.add(r.rule_id.clone(), GroundHead::Atom(*e), r.pos.clone(), Vec::new());
                }
            }
            GroundHead::None => {}
        }
    }
    b.finish()
}

/// Least model of the definite part of `gp` (negative bodies, choice rules
/// and denials are ignored).
pub fn least_model(gp: &GroundProgram) -> BTreeSet<AtomId> {
    let definite = gp.rules().iter().filter_map(|r| match r.head {
        GroundHead::Atom(h) if r.neg.is_empty() => Some((h, r.pos.as_slice())),
        _ => None,
    });
    least_fixpoint(gp.len(), definite).into_iter().enumerate().filter(|(_, t)| *t).map(|(i, _)| i).collect()
}

fn least_fixpoint<'a>(n: usize, rules: impl Iterator<Item = (AtomId, &'a [AtomId])>) -> Vec<bool> {
    let rules: Vec<_> = rules.collect();
    let mut missing: Vec<usize> = rules.iter().map(|(_, b)| b.len()).collect();
    let mut watch: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, (_, body)) in rules.iter().enumerate() {
        for &a in *body {
            watch[a].push(i);
        }
    }
    let mut truth = vec![false; n];
    let mut queue: Vec<AtomId> = Vec::new();
    for (i, (h, _)) in rules.iter().enumerate() {
        if missing[i] == 0 && !truth[*h] {
            truth[*h] = true;
            queue.push(*h);
        }
    }
    while let Some(a) = queue.pop() {
        for &ri in &watch[a] {
            missing[ri] -= 1;
            let h = rules[ri].0;
            if missing[ri] == 0 && !truth[h] {
                truth[h] = true;
                queue.push(h);
            }
        }
    }
    truth
}

/// Denials hold, active choice bounds hold, and the candidate is the least
/// model of its reduct.
pub fn is_stable(gp: &GroundProgram, candidate: &BTreeSet<AtomId>) -> bool {
    let mut v = vec![false; gp.len()];
    for &a in candidate {
        if a >= v.len() {
            return false;
        }
        v[a] = true;
    }
    is_stable_vec(gp, &v)
}

fn is_stable_vec(gp: &GroundProgram, m: &[bool]) -> bool {
    let body_holds = |pos: &[AtomId], neg: &[AtomId]| pos.iter().all(|&a| m[a]) && neg.iter().all(|&a| !m[a]);
    let mut reduct_rules: Vec<(AtomId, &[AtomId])> = Vec::new();
    for r in gp.rules() {
        match &r.head {
            GroundHead::None => {
                if body_holds(&r.pos, &r.neg) {
                    return false;
                }
            }
            GroundHead::Choice { lower, upper, elements } => {
                if body_holds(&r.pos, &r.neg) {
                    let count = elements.iter().filter(|&&e| m[e]).count() as u32;
                    if count < *lower || count > *upper {
                        return false;
                    }
                }
                if r.neg.iter().all(|&a| !m[a]) {
                    reduct_rules.extend(elements.iter().filter(|&&e| m[e]).map(|&e| (e, r.pos.as_slice())));
                }
            }
            GroundHead::Atom(h) => {
                if r.neg.iter().all(|&a| !m[a]) {
                    reduct_rules.push((*h, r.pos.as_slice()));
                }
            }
        }
    }
    least_fixpoint(m.len(), reduct_rules.into_iter()) == m
}

#[derive(Clone, Copy)]
enum Work {
    Rule(usize),
    Support(AtomId),
}

/// Enumerates stable models one at a time.
pub struct Solver<'a> {
    gp: &'a GroundProgram,
    supports: Vec<Vec<usize>>,
    occurs: Vec<Vec<usize>>,
    val: Vec<Option<bool>>,
    trail: Vec<AtomId>,
    /// (trail length before, atom, already flipped to true)
    decisions: Vec<(usize, AtomId, bool)>,
    queue: Vec<Work>,
    assumptions: Vec<(AtomId, bool)>,
    started: bool,
    done: bool,
}

impl<'a> Solver<'a> {
    pub fn new(gp: &'a GroundProgram) -> Self {
        Self::with_assumptions(gp, Vec::new())
    }

    /// Restricts the search to models agreeing with the given atom values.
    pub fn with_assumptions(gp: &'a GroundProgram, assumptions: Vec<(AtomId, bool)>) -> Self {
        let n = gp.len();
        let mut supports = vec![Vec::new(); n];
        let mut occurs = vec![Vec::new(); n];
        for (ri, r) in gp.rules().iter().enumerate() {
            for &h in r.head_atoms() {
                supports[h].push(ri);
                occurs[h].push(ri);
            }
            for &a in r.pos.iter().chain(&r.neg) {
                occurs[a].push(ri);
            }
        }
        for o in &mut occurs {
            o.dedup();
        }
        Solver {
            gp,
            supports,
            occurs,
            val: vec![None; n],
            trail: Vec::new(),
            decisions: Vec::new(),
            queue: Vec::new(),
            assumptions,
            started: false,
            done: false,
        }
    }

    fn assign(&mut self, a: AtomId, v: bool) -> bool {
        match self.val[a] {
            Some(cur) => cur == v,
            None => {
                self.val[a] = Some(v);
                self.trail.push(a);
                self.queue.push(Work::Support(a));
                for &ri in &self.occurs[a] {
                    self.queue.push(Work::Rule(ri));
                    for &h in self.gp.rules()[ri].head_atoms() {
                        self.queue.push(Work::Support(h));
                    }
                }
                true
            }
        }
    }

    /// (some literal false, unknown literal count, one unknown literal as (atom, sign)).
    fn body_state(&self, ri: usize) -> (bool, usize, Option<(AtomId, bool)>) {
        let r = &self.gp.rules()[ri];
        let mut unknown = 0;
        let mut last = None;
        for (&a, positive) in r.pos.iter().map(|a| (a, true)).chain(r.neg.iter().map(|a| (a, false))) {
            match self.val[a] {
                Some(v) if v != positive => return (true, 0, None),
                Some(_) => {}
                None => {
                    unknown += 1;
                    last = Some((a, positive));
                }
            }
        }
        (false, unknown, last)
    }

    fn check_rule(&mut self, ri: usize) -> bool {
        let (falsified, unknown, last) = self.body_state(ri);
        if falsified {
            return true;
        }
        let gp = self.gp;
        match &gp.rules()[ri].head {
            GroundHead::Atom(h) => {
                if unknown == 0 {
                    return self.assign(*h, true);
                }
                if unknown == 1 && self.val[*h] == Some(false) {
                    let (a, positive) = last.unwrap();
                    return self.assign(a, !positive);
                }
                true
            }
            GroundHead::None => match (unknown, last) {
                (0, _) => false,
                (1, Some((a, positive))) => self.assign(a, !positive),
                _ => true,
            },
            GroundHead::Choice { lower, upper, elements } => {
                let t = elements.iter().filter(|&&e| self.val[e] == Some(true)).count() as u32;
                let u = elements.iter().filter(|&&e| self.val[e].is_none()).count() as u32;
                let violated = t > *upper || t + u < *lower;
                if unknown == 0 {
                    if violated {
                        return false;
                    }
                    if t == *upper && u > 0 {
                        for &e in elements {
                            if self.val[e].is_none() && !self.assign(e, false) {
                                return false;
                            }
                        }
                    } else if t + u == *lower && u > 0 {
                        for &e in elements {
                            if self.val[e].is_none() && !self.assign(e, true) {
                                return false;
                            }
                        }
                    }
                } else if unknown == 1 && violated {
                    let (a, positive) = last.unwrap();
                    return self.assign(a, !positive);
                }
                true
            }
        }
    }

    fn check_support(&mut self, a: AtomId) -> bool {
        if self.val[a] == Some(false) {
            return true;
        }
        let mut live = None;
        let mut count = 0;
        for &ri in &self.supports[a] {
            if !self.body_state(ri).0 {
                count += 1;
                live = Some(ri);
            }
        }
        match count {
            0 => self.assign(a, false),
            1 if self.val[a] == Some(true) => {
                let r = &self.gp.rules()[live.unwrap()];
                let lits: Vec<(AtomId, bool)> =
                    r.pos.iter().map(|&x| (x, true)).chain(r.neg.iter().map(|&x| (x, false))).collect();
                lits.into_iter().all(|(x, v)| self.assign(x, v))
            }
            _ => true,
        }
    }

    fn propagate(&mut self) -> bool {
        while let Some(w) = self.queue.pop() {
            let ok = match w {
                Work::Rule(ri) => self.check_rule(ri),
                Work::Support(a) => self.check_support(a),
            };
            if !ok {
                self.queue.clear();
                return false;
            }
        }
        true
    }

    fn undo_to(&mut self, len: usize) {
        while self.trail.len() > len {
            let a = self.trail.pop().unwrap();
            self.val[a] = None;
        }
    }

    /// Flips the most recent unflipped decision; false when the tree is exhausted.
    fn backtrack(&mut self) -> bool {
        while let Some((pos, a, flipped)) = self.decisions.pop() {
            self.undo_to(pos);
            if flipped {
                continue;
            }
            self.decisions.push((pos, a, true));
            if self.assign(a, true) && self.propagate() {
                return true;
            }
        }
        false
    }

    fn start(&mut self) -> bool {
        for ri in 0..self.gp.rules().len() {
            self.queue.push(Work::Rule(ri));
        }
        for a in 0..self.gp.len() {
            self.queue.push(Work::Support(a));
        }
        for (a, v) in self.assumptions.clone() {
            if !self.assign(a, v) {
                return false;
            }
        }
        self.propagate()
    }

    pub fn next_model(&mut self) -> Option<StableModel> {
        if self.done {
            return None;
        }
        let resumed = if self.started { self.backtrack() } else {
            self.started = true;
            self.start()
        };
        if !resumed {
            self.done = true;
            return None;
        }
        loop {
            match self.val.iter().position(Option::is_none) {
                None => {
                    let m: Vec<bool> = self.val.iter().map(|v| v.unwrap()).collect();
                    if is_stable_vec(self.gp, &m) {
                        let ids = m.iter().enumerate().filter(|(_, t)| **t).map(|(i, _)| i);
                        return Some(StableModel::from_ids(self.gp, ids));
                    }
                    if !self.backtrack() {
                        self.done = true;
                        return None;
                    }
                }
                Some(a) => {
                    self.decisions.push((self.trail.len(), a, false));
                    if !(self.assign(a, false) && self.propagate()) && !self.backtrack() {
                        self.done = true;
                        return None;
                    }
                }
            }
        }
    }
}

impl Iterator for Solver<'_> {
    type Item = StableModel;

    fn next(&mut self) -> Option<StableModel> {
        self.next_model()
    }
}

/// All stable models (or the first `limit`) in deterministic order.
pub fn enumerate_stable_models(gp: &GroundProgram, limit: Option<usize>) -> Vec<StableModel> {
    let solver = Solver::new(gp);
    match limit {
        Some(k) => solver.take(k).collect(),
        None => solver.collect(),
    }
}

/// Brute-force enumeration over every subset of the base, for bases of at
/// most 20 atoms. Intended as a reference for the search-based solver.
pub fn exhaustive_models(gp: &GroundProgram) -> Option<Vec<StableModel>> {
    let n = gp.len();
    if n > 20 {
        return None;
    }
    let mut out = Vec::new();
    for mask in 0u32..(1u32 << n) {
        let m: Vec<bool> = (0..n).map(|i| mask & (1 << i) != 0).collect();
        if is_stable_vec(gp, &m) {
            out.push(StableModel::from_ids(gp, (0..n).filter(|&i| m[i])));
        }
    }
    out.sort();
    Some(out)
}

fn assumptions(gp: &GroundProgram, inclusions: &BTreeSet<Atom>, exclusions: &BTreeSet<Atom>) -> Option<Vec<(AtomId, bool)>> {
    let mut out = Vec::new();
    for a in inclusions {
        out.push((gp.id_of(a)?, true));
    }
    out.extend(exclusions.iter().filter_map(|a| gp.id_of(a)).map(|i| (i, false)));
    Some(out)
}

/// Some stable model contains every inclusion and no exclusion.
pub fn brave_entails(gp: &GroundProgram, inclusions: &BTreeSet<Atom>, exclusions: &BTreeSet<Atom>) -> bool {
    brave_witness(gp, inclusions, exclusions).is_some()
}

/// A stable model realizing the inclusion/exclusion pattern, if any.
pub fn brave_witness(gp: &GroundProgram, inclusions: &BTreeSet<Atom>, exclusions: &BTreeSet<Atom>) -> Option<StableModel> {
    let assume = assumptions(gp, inclusions, exclusions)?;
    Solver::with_assumptions(gp, assume).next_model()
}

/// The program is consistent and every stable model contains every
/// inclusion and no exclusion.
pub fn cautious_entails(gp: &GroundProgram, inclusions: &BTreeSet<Atom>, exclusions: &BTreeSet<Atom>) -> bool {
    let mut any = false;
    for m in Solver::new(gp) {
        any = true;
        if !inclusions.iter().all(|a| m.contains(a)) || exclusions.iter().any(|a| m.contains(a)) {
            return false;
        }
    }
    any
}

pub fn is_consistent(gp: &GroundProgram) -> bool {
    Solver::new(gp).next_model().is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground::ground_program;
    use crate::syntax::parse_program;

    fn gp(src: &str) -> GroundProgram {
        ground_program(&parse_program(src).unwrap()).unwrap()
    }

    fn models(src: &str) -> Vec<String> {
        enumerate_stable_models(&gp(src), None).iter().map(|m| m.to_string()).collect()
    }

    fn ids(g: &GroundProgram, atoms: &[&str]) -> BTreeSet<AtomId> {
        atoms.iter().map(|a| g.id_of(&parse_atom(a).unwrap()).unwrap()).collect()
    }

    fn set(atoms: &[&str]) -> BTreeSet<Atom> {
        atoms.iter().map(|a| parse_atom(a).unwrap()).collect()
    }

    #[test]
    fn reduct_of_normal_rule() {
        let g = gp("p :- not q.");
        assert_eq!(reduct(&g, &ids(&g, &["p"])).to_string(), "p.\n");
        assert_eq!(reduct(&g, &ids(&g, &["q"])).to_string(), "");
    }

    #[test]
    fn reduct_of_choice_rule() {
        let g = gp("1{p;q}2.");
        assert_eq!(reduct(&g, &ids(&g, &["p"])).to_string(), "p.\n");
    }

    #[test]
    fn least_models() {
        let g = gp("p. q :- p.");
        assert_eq!(least_model(&g), ids(&g, &["p", "q"]));
        assert!(least_model(&gp("")).is_empty());
        let mut b = GroundProgramBuilder::new();
        let a = b.atom(Atom::prop("a"));
        let bb = b.atom(Atom::prop("b"));
        b.add("r1", GroundHead::Atom(a), vec![bb], vec![]);
        b.add("r2", GroundHead::Atom(bb), vec![a], vec![]);
        assert!(least_model(&b.finish()).is_empty());
    }

    #[test]
    fn stability_checks() {
        let g = gp("1{p;q}2.");
        assert!(is_stable(&g, &ids(&g, &["p", "q"])));
        assert!(!is_stable(&g, &BTreeSet::new()));
        let g = gp("p :- not p.");
        assert!(!is_stable(&g, &ids(&g, &["p"])));
        assert!(!is_stable(&g, &BTreeSet::new()));
    }

    #[test]
    fn choice_rule_has_three_models() {
        let mut m = models("1{p;q}2.");
        m.sort();
        assert_eq!(m, ["p", "p q", "q"]);
    }

    #[test]
    fn even_loop_has_two_models() {
        assert_eq!(models("p :- not q. q :- not p."), ["q", "p"]);
    }

    #[test]
    fn empty_program_has_empty_model() {
        assert_eq!(models(""), [""]);
    }

    #[test]
    fn odd_loop_is_inconsistent() {
        assert!(models("p :- not p.").is_empty());
        assert!(!is_consistent(&gp("p :- not p.")));
    }

    #[test]
    fn positive_loop_is_unfounded() {
        assert_eq!(models("{c}. a :- b. b :- a. a :- c."), ["", "a b c"]);
    }

    #[test]
    fn limit_stops_early() {
        assert_eq!(enumerate_stable_models(&gp("{a;b;c}."), Some(3)).len(), 3);
        assert_eq!(enumerate_stable_models(&gp("{a;b;c}."), None).len(), 8);
    }

    #[test]
    fn brave_cases() {
        let g = gp("1{p;q}2.");
        assert!(brave_entails(&g, &set(&["p"]), &set(&["q"])));
        assert!(!brave_entails(&gp("p :- not p."), &set(&[]), &set(&[])));
        assert!(brave_entails(&gp(""), &set(&[]), &set(&[])));
        assert!(!brave_entails(&g, &set(&["r"]), &set(&[])));
    }

    #[test]
    fn cautious_cases() {
        assert!(cautious_entails(&gp("p."), &set(&["p"]), &set(&[])));
        assert!(!cautious_entails(&gp("1{p;q}2."), &set(&["p"]), &set(&[])));
        assert!(!cautious_entails(&gp("p :- not p."), &set(&["q"]), &set(&[])));
    }

    #[test]
    fn denial_prunes() {
        assert_eq!(models("{a;b}. :- a, b. :- not a, not b."), ["b", "a"]);
    }

    #[test]
    fn exhaustive_agrees_on_small_program() {
        let g = gp("{a;b}. c :- a, not b. d :- not c. :- d, b.");
        let mut fast = enumerate_stable_models(&g, None);
        fast.sort();
        assert_eq!(fast, exhaustive_models(&g).unwrap());
    }

    #[test]
    fn model_line_round_trip() {
        let m = StableModel::new(set(&["robbery(\"Giulio\",\"Veronica\")", "p", "adherence(\"a b\",c,4)"]));
        let line = m.to_string();
        assert_eq!(StableModel::parse_line(&line).unwrap(), m);
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(serde_json::from_str::<StableModel>(&json).unwrap(), m);
    }
}
