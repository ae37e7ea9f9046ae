//! Vocabulary checks over knowledge-base files.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Kb, MARKER};
use crate::ground::{ground_program, GroundHead};
use crate::solve::brave_entails;
use crate::syntax::{Atom, Literal, Origin, Program};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LintFinding {
    pub severity: Severity,
    pub file: Option<String>,
    pub message: String,
}

impl fmt::Display for LintFinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        match &self.file {
            Some(file) => write!(f, "{sev}: {file}: {}", self.message),
            None => write!(f, "{sev}: {}", self.message),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LintReport {
    pub findings: Vec<LintFinding>,
}

impl LintReport {
    pub fn has_errors(&self) -> bool {
        self.findings.iter().any(|f| f.severity == Severity::Error)
    }

    pub fn errors(&self) -> impl Iterator<Item = &LintFinding> {
        self.findings.iter().filter(|f| f.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &LintFinding> {
        self.findings.iter().filter(|f| f.severity == Severity::Warning)
    }

    fn push(&mut self, severity: Severity, file: Option<&str>, message: String) {
        self.findings.push(LintFinding { severity, file: file.map(str::to_string), message });
    }
}

/// Words that end like plurals or past participles but are the agreed
/// vocabulary.
const ALLOWED_WORDS: &[&str] = &[
    "beatings", "injuries", "res", "subtracted", "aggravated", "illness", "process", "access", "is", "has", "was",
];

fn atoms_of(p: &Program) -> impl Iterator<Item = &Atom> {
    p.rules.iter().flat_map(|r| {
        r.head_atoms().into_iter().chain(
            r.body
                .iter()
                .filter_map(|l| match l {
                    Literal::Pos(a) | Literal::Neg(a) => Some(a),
                    Literal::Cmp { .. } => None,
                }),
        )
    })
}

fn naming_warning(predicate: &str) -> Option<String> {
    for word in predicate.split('_') {
        if word.len() <= 2 || ALLOWED_WORDS.contains(&word) {
            continue;
        }
        if word.ends_with('s') && !word.ends_with("ss") && !word.ends_with("us") && !word.ends_with("is") {
            return Some(format!("predicate `{predicate}`: `{word}` looks plural; use the singular"));
        }
        if word.ends_with("ed") && !word.ends_with("eed") {
            return Some(format!("predicate `{predicate}`: `{word}` looks past tense; use the present"));
        }
    }
    None
}

/// Arity homogeneity (error), naming conventions (warning) and marker
/// misuse by article rules (error) over named files.
pub fn lint_files(files: &[(String, Program)]) -> LintReport {
    let mut report = LintReport::default();
    let mut arities: BTreeMap<&str, BTreeMap<usize, BTreeSet<&str>>> = BTreeMap::new();
    for (name, p) in files {
        for a in atoms_of(p) {
            arities.entry(&a.predicate).or_default().entry(a.args.len()).or_default().insert(name);
        }
    }
    for (pred, by_arity) in &arities {
        if by_arity.len() > 1 {
            let detail: Vec<String> = by_arity
                .iter()
                .map(|(n, fs)| format!("{pred}/{n} in {}", fs.iter().copied().collect::<Vec<_>>().join(", ")))
                .collect();
            report.push(Severity::Error, None, format!("predicate `{pred}` used with different arities: {}", detail.join("; ")));
        }
    }
    let mut warned = BTreeSet::new();
    for (name, p) in files {
        for a in atoms_of(p) {
            if warned.insert(a.predicate.clone()) {
                if let Some(w) = naming_warning(&a.predicate) {
                    report.push(Severity::Warning, Some(name), w);
                }
            }
        }
        for r in &p.rules {
            if r.origin == Origin::Article && r.head_atoms().iter().any(|a| a.predicate == MARKER) {
                report.push(Severity::Error, Some(name), format!("article rule `{}` derives {MARKER}", r.id));
            }
        }
    }
    report
}

/// For each ground learned-rule instance whose body can hold in some model
/// of `program`, checks that its marker can hold too.
pub fn marker_reachability(program: &Program) -> Result<Vec<String>, String> {
    let gp = ground_program(program).map_err(|e| e.to_string())?;
    let mut problems = Vec::new();
    for r in gp.rules() {
        if r.origin != Origin::LearnedJudgment {
            continue;
        }
        let GroundHead::Choice { elements, .. } = &r.head else { continue };
        let Some(&marker) = elements.iter().find(|&&e| gp.atom(e).predicate == MARKER) else {
            problems.push(format!("learned rule `{}` has no {MARKER} marker", r.rule_id));
            continue;
        };
        let pos: BTreeSet<Atom> = r.pos.iter().map(|&a| gp.atom(a).clone()).collect();
        let neg: BTreeSet<Atom> = r.neg.iter().map(|&a| gp.atom(a).clone()).collect();
        if !brave_entails(&gp, &pos, &neg) {
            continue;
        }
        let mut with_marker = pos.clone();
        with_marker.insert(gp.atom(marker).clone());
        if !brave_entails(&gp, &with_marker, &neg) {
            problems.push(format!("marker {} of `{}` is unreachable", gp.atom(marker), r.rule_id));
        }
    }
    Ok(problems)
}

/// Lints the KB files, then checks marker reachability against every
/// corpus case.
pub fn lint_kb(kb: &Kb) -> LintReport {
    let mut groups: BTreeMap<String, Program> = BTreeMap::new();
    for r in &kb.program.rules {
        let file = r.id.split([':', '/']).next().unwrap_or_default().to_string();
        groups.entry(file).or_default().rules.push(r.clone());
    }
    let files: Vec<(String, Program)> = groups.into_iter().collect();
    let mut report = lint_files(&files);
    for j in &kb.judgments {
        let program = match kb.program.merge(&j.facts_program()) {
            Ok(p) => p,
            Err(id) => {
                report.push(Severity::Error, Some(&j.id), format!("duplicate rule id `{id}`"));
                continue;
            }
        };
        match marker_reachability(&program) {
            Ok(problems) => {
                for p in problems {
                    report.push(Severity::Error, Some(&j.id), p);
                }
            }
            Err(e) => report.push(Severity::Error, Some(&j.id), e),
        }
    }
    report
}
