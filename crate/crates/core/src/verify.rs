//! Static verification of the knowledge base against judged cases, and
//! evidence constraints.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ground::ground_program;
use crate::kb::{facts_program, JudgmentRecord};
use crate::solve::{Solver, StableModel};
use crate::syntax::{Atom, Head, Literal, Origin, Program, Rule, Signature};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("evidence constraint must be a denial, got `{0}`")]
    NotADenial(String),
    #[error("evidence constraint has unsafe variable `{0}`")]
    Unsafe(String),
    #[error("{0}")]
    Program(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactCheck {
    pub fact: String,
    pub consistent: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Phase1 {
    /// `kb ∪ {A_i}` for each fact on its own.
    pub individual: Vec<FactCheck>,
    /// `kb ∪ {A_1..A_i}` for each prefix, when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cumulative: Option<Vec<FactCheck>>,
}

impl Phase1 {
    pub fn inconsistent_facts(&self) -> Vec<String> {
        let mut out: Vec<String> = self.individual.iter().filter(|c| !c.consistent).map(|c| c.fact.clone()).collect();
        if let Some(cum) = &self.cumulative {
            if let Some(first) = cum.iter().find(|c| !c.consistent) {
                if !out.contains(&first.fact) {
                    out.push(first.fact.clone());
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "kebab-case")]
pub enum Phase2 {
    Match,
    TooWeak { missing: Vec<String> },
    Inconsistent,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetFinding {
    pub dropped: Vec<String>,
    /// Distinct verdict projections over the models of the subset.
    pub verdicts: Vec<Vec<String>>,
    pub divergent: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Phase3 {
    pub examined: usize,
    pub full_case: Vec<Vec<String>>,
    pub subsets: Vec<SubsetFinding>,
}

impl Phase3 {
    pub fn divergent(&self) -> impl Iterator<Item = &SubsetFinding> {
        self.subsets.iter().filter(|s| s.divergent)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Diagnosis {
    Ok,
    TooRestrictive { facts: Vec<String> },
    TooWeak { missing: Vec<String> },
    Inconsistent,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefinementReport {
    pub schema: String,
    pub case_id: String,
    pub phase1: Phase1,
    pub phase2: Phase2,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase3: Option<Phase3>,
    pub diagnosis: Diagnosis,
}

pub const REPORT_SCHEMA: &str = "juris.refinement-report/1";

impl RefinementReport {
    /// Passes the corpus gate: every fact consistent and the expected model found.
    pub fn passes(&self) -> bool {
        self.diagnosis == Diagnosis::Ok
    }
}

impl fmt::Display for RefinementReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = match &self.diagnosis {
            Diagnosis::Ok => "ok".to_string(),
            Diagnosis::TooRestrictive { facts } => format!("too restrictive for {}", facts.join(", ")),
            Diagnosis::TooWeak { missing } => format!("too weak, missing {}", missing.join(", ")),
            Diagnosis::Inconsistent => "inconsistent".to_string(),
        };
        writeln!(f, "case {}: {status}", self.case_id)?;
        let ok = self.phase1.individual.iter().filter(|c| c.consistent).count();
        writeln!(f, "  phase 1: {ok}/{} facts consistent", self.phase1.individual.len())?;
        if let Some(cum) = &self.phase1.cumulative {
            let ok = cum.iter().take_while(|c| c.consistent).count();
            writeln!(f, "  phase 1 (cumulative): {ok}/{} prefixes consistent", cum.len())?;
        }
        let p2 = match &self.phase2 {
            Phase2::Match => "expected verdicts found".to_string(),
            Phase2::TooWeak { missing } => format!("missing {}", missing.join(", ")),
            Phase2::Inconsistent => "no stable model".to_string(),
        };
        write!(f, "  phase 2: {p2}")?;
        if let Some(p3) = &self.phase3 {
            write!(f, "\n  phase 3: {} subsets examined, {} divergent", p3.examined, p3.divergent().count())?;
            for s in p3.divergent() {
                write!(f, "\n    without {}: {:?}", s.dropped.join(", "), s.verdicts)?;
            }
        }
        Ok(())
    }
}

fn with_facts(kb: &Program, name: &str, facts: &[Atom]) -> Result<Program, VerifyError> {
    let mut p = kb.clone();
    p.extend_renaming(facts_program(name, facts).rules);
    Ok(p)
}

fn models(program: &Program, limit: Option<usize>) -> Result<Vec<StableModel>, VerifyError> {
    let gp = ground_program(program).map_err(|e| VerifyError::Program(e.to_string()))?;
    let solver = Solver::new(&gp);
    Ok(match limit {
        Some(k) => solver.take(k).collect(),
        None => solver.collect(),
    })
}

fn consistent(program: &Program) -> Result<bool, VerifyError> {
    Ok(!models(program, Some(1))?.is_empty())
}

/// Phase 1: each fact alone, and optionally each prefix of the facts.
pub fn check_fact_consistency(kb: &Program, case: &JudgmentRecord, cumulative: bool) -> Result<Phase1, VerifyError> {
    let mut individual = Vec::new();
    for f in &case.facts {
        let p = with_facts(kb, &case.id, std::slice::from_ref(f))?;
        individual.push(FactCheck { fact: f.to_string(), consistent: consistent(&p)? });
    }
    let cumulative = if cumulative {
        let mut out = Vec::new();
        for i in 1..=case.facts.len() {
            let p = with_facts(kb, &case.id, &case.facts[..i])?;
            out.push(FactCheck { fact: case.facts[i - 1].to_string(), consistent: consistent(&p)? });
        }
        Some(out)
    } else {
        None
    };
    Ok(Phase1 { individual, cumulative })
}

fn fact_denial(case: &str, i: usize, fact: &Atom) -> Rule {
    Rule::new(format!("{case}:require{i}"), Head::None, vec![Literal::Neg(fact.clone())])
}

/// Phase 2: facts plus `:- not A_j.` for each fact; matches when some
/// stable model contains every expected verdict atom.
pub fn check_expected_model(kb: &Program, case: &JudgmentRecord) -> Result<Phase2, VerifyError> {
    let mut p = with_facts(kb, &case.id, &case.facts)?;
    p.extend_renaming(case.facts.iter().enumerate().map(|(i, f)| fact_denial(&case.id, i, f)));
    let ms = models(&p, None)?;
    if ms.is_empty() {
        return Ok(Phase2::Inconsistent);
    }
    let best = ms
        .iter()
        .max_by_key(|m| case.expected.iter().filter(|a| m.contains(a)).count())
        .expect("non-empty");
    let missing: Vec<String> = case.expected.iter().filter(|a| !best.contains(a)).map(Atom::to_string).collect();
    Ok(if missing.is_empty() { Phase2::Match } else { Phase2::TooWeak { missing } })
}

fn project(models: &[StableModel], verdicts: &BTreeSet<Signature>) -> Vec<Vec<String>> {
    let set: BTreeSet<Vec<String>> = models
        .iter()
        .map(|m| m.atoms().iter().filter(|a| verdicts.contains(&a.signature())).map(Atom::to_string).collect())
        .collect();
    set.into_iter().collect()
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Phase 3: solves every subset of the facts missing at most `max_gap` of
/// them and compares verdict projections with the full case.
pub fn explore_subsets(
    kb: &Program,
    case: &JudgmentRecord,
    max_gap: usize,
    verdicts: &BTreeSet<Signature>,
) -> Result<Phase3, VerifyError> {
    let full = project(&models(&with_facts(kb, &case.id, &case.facts)?, None)?, verdicts);
    let mut out = Phase3 { examined: 0, full_case: full.clone(), subsets: Vec::new() };
    for k in 0..=max_gap.min(case.facts.len()) {
        for dropped in combinations(case.facts.len(), k) {
            let kept: Vec<Atom> =
                (0..case.facts.len()).filter(|i| !dropped.contains(i)).map(|i| case.facts[i].clone()).collect();
            let verdicts = project(&models(&with_facts(kb, &case.id, &kept)?, None)?, verdicts);
            out.examined += 1;
            out.subsets.push(SubsetFinding {
                dropped: dropped.iter().map(|&i| case.facts[i].to_string()).collect(),
                divergent: verdicts != full,
                verdicts,
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VerifyOptions {
    pub cumulative: bool,
    /// Run phase 3 with this gap.
    pub subset_gap: Option<usize>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { cumulative: true, subset_gap: None }
    }
}

pub fn verify_case(
    kb: &Program,
    case: &JudgmentRecord,
    verdicts: &BTreeSet<Signature>,
    opts: VerifyOptions,
) -> Result<RefinementReport, VerifyError> {
    let phase1 = check_fact_consistency(kb, case, opts.cumulative)?;
    let phase2 = check_expected_model(kb, case)?;
    let phase3 = match opts.subset_gap {
        Some(gap) => Some(explore_subsets(kb, case, gap, verdicts)?),
        None => None,
    };
    let restrictive = phase1.inconsistent_facts();
    let diagnosis = if !restrictive.is_empty() {
        Diagnosis::TooRestrictive { facts: restrictive }
    } else {
        match &phase2 {
            Phase2::Match => Diagnosis::Ok,
            Phase2::TooWeak { missing } => Diagnosis::TooWeak { missing: missing.clone() },
            Phase2::Inconsistent => Diagnosis::Inconsistent,
        }
    };
    Ok(RefinementReport { schema: REPORT_SCHEMA.to_string(), case_id: case.id.clone(), phase1, phase2, phase3, diagnosis })
}

/// Adds a denial stemming from new evidence. The model set can only shrink.
pub fn add_evidence_constraint(kb: &Program, constraint: &Rule) -> Result<Program, VerifyError> {
    if !constraint.is_denial() {
        return Err(VerifyError::NotADenial(constraint.to_string()));
    }
    if let Some(v) = constraint.unsafe_variable() {
        return Err(VerifyError::Unsafe(v));
    }
    let mut c = constraint.clone();
    c.origin = Origin::UserEvidence;
    let mut out = kb.clone();
    out.extend_renaming([c]);
    Ok(out)
}

/// Groups reports by diagnosis kind, for summaries.
pub fn summarize(reports: &[RefinementReport]) -> BTreeMap<&'static str, usize> {
    let mut out = BTreeMap::new();
    for r in reports {
        let k = match r.diagnosis {
            Diagnosis::Ok => "ok",
            Diagnosis::TooRestrictive { .. } => "too-restrictive",
            Diagnosis::TooWeak { .. } => "too-weak",
            Diagnosis::Inconsistent => "inconsistent",
        };
        *out.entry(k).or_insert(0) += 1;
    }
    out
}
