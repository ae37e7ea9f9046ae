//! Contradiction findings and their resolution by interpretive maxims.

use std::collections::{BTreeSet, VecDeque};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{Kb, MARKER};
use crate::explain::Supports;
use crate::ground::{ground_program, AtomId, GroundHead, GroundProgram};
use crate::solve::{Solver, StableModel};
use crate::syntax::{Origin, Program, Term};

pub const CONTRADICTION: &str = "contradiction";

/// Court level given to statute articles when comparing authorities.
const LEGISLATION_LEVEL: u8 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Maxim {
    Specialis,
    Superior,
    Posterior,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Resolution {
    AWins,
    BWins,
    Unresolved,
}

impl Resolution {
    fn flip(self) -> Self {
        match self {
            Resolution::AWins => Resolution::BWins,
            Resolution::BWins => Resolution::AWins,
            Resolution::Unresolved => Resolution::Unresolved,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SourceRef {
    Article {
        rule_id: String,
        article: Option<String>,
    },
    Judgment {
        id: String,
        citation: String,
        court_level: Option<u8>,
        date: Option<NaiveDate>,
        #[serde(default)]
        specific_over: Vec<String>,
    },
    /// Case facts, user evidence or rules of unknown provenance.
    Other {
        rule_id: String,
    },
}

impl SourceRef {
    fn ids(&self) -> Vec<&str> {
        match self {
            SourceRef::Article { rule_id, article } => {
                let mut v = vec![rule_id.as_str()];
                v.extend(article.as_deref());
                v
            }
            SourceRef::Judgment { id, .. } => vec![id.as_str()],
            SourceRef::Other { rule_id } => vec![rule_id.as_str()],
        }
    }

    fn specific_over(&self) -> &[String] {
        match self {
            SourceRef::Judgment { specific_over, .. } => specific_over,
            _ => &[],
        }
    }

    fn declares_over(&self, other: &SourceRef) -> bool {
        other.ids().iter().any(|id| self.specific_over().iter().any(|s| s == id))
    }

    fn label(&self) -> String {
        match self {
            SourceRef::Article { rule_id, article: Some(a) } => format!("art. {a} ({rule_id})"),
            SourceRef::Article { rule_id, article: None } => rule_id.clone(),
            SourceRef::Judgment { citation, .. } => citation.clone(),
            SourceRef::Other { rule_id } => rule_id.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContradictionFinding {
    /// The contradiction atom as text.
    pub atom: String,
    pub claim_a: String,
    pub claim_b: String,
    pub subject: String,
    pub sources: (SourceRef, SourceRef),
    pub resolution: Resolution,
    pub applied_maxims: Vec<Maxim>,
    #[serde(default)]
    pub diagnostics: Vec<String>,
}

impl ContradictionFinding {
    pub fn swapped(&self) -> Self {
        ContradictionFinding {
            atom: self.atom.clone(),
            claim_a: self.claim_b.clone(),
            claim_b: self.claim_a.clone(),
            subject: self.subject.clone(),
            sources: (self.sources.1.clone(), self.sources.0.clone()),
            resolution: self.resolution.flip(),
            applied_maxims: self.applied_maxims.clone(),
            diagnostics: self.diagnostics.clone(),
        }
    }
}

fn authority(s: &SourceRef) -> Option<u8> {
    match s {
        SourceRef::Article { .. } => Some(LEGISLATION_LEVEL),
        SourceRef::Judgment { court_level, .. } => *court_level,
        SourceRef::Other { .. } => None,
    }
}

fn date(s: &SourceRef) -> Option<NaiveDate> {
    match s {
        SourceRef::Judgment { date, .. } => *date,
        _ => None,
    }
}

fn missing_metadata(s: &SourceRef) -> Vec<String> {
    match s {
        SourceRef::Judgment { court_level, date, citation, .. } => {
            let mut v = Vec::new();
            if court_level.is_none() {
                v.push(format!("missing court level for {citation}"));
            }
            if date.is_none() {
                v.push(format!("missing date for {citation}"));
            }
            v
        }
        SourceRef::Other { rule_id } => vec![format!("no provenance metadata for {rule_id}")],
        SourceRef::Article { .. } => Vec::new(),
    }
}

fn vote<T: Ord>(a: Option<T>, b: Option<T>) -> Option<Resolution> {
    match (a, b) {
        (Some(a), Some(b)) if a > b => Some(Resolution::AWins),
        (Some(a), Some(b)) if a < b => Some(Resolution::BWins),
        _ => None,
    }
}

/// Applies lex specialis, lex superior and lex posterior. An explicit
/// specificity declaration decides on its own; otherwise the applicable
/// maxims must agree.
pub fn resolve_priority(finding: &ContradictionFinding) -> ContradictionFinding {
    let (a, b) = &finding.sources;
    let mut out = finding.clone();
    out.applied_maxims.clear();
    out.diagnostics.clear();
    if a == b {
        out.resolution = Resolution::Unresolved;
        out.diagnostics.push(format!("both claims rest on the same source: {}", a.label()));
        return out;
    }
    let specialis = match (a.declares_over(b), b.declares_over(a)) {
        (true, false) => Some(Resolution::AWins),
        (false, true) => Some(Resolution::BWins),
        (true, true) => {
            out.diagnostics.push("each source declares itself more specific than the other".into());
            None
        }
        (false, false) => None,
    };
    let superior = vote(authority(a), authority(b));
    let posterior = vote(date(a), date(b));
    for (m, v) in [(Maxim::Specialis, specialis), (Maxim::Superior, superior), (Maxim::Posterior, posterior)] {
        if v.is_some() {
            out.applied_maxims.push(m);
        }
    }
    if let Some(r) = specialis {
        out.resolution = r;
        return out;
    }
    out.diagnostics.extend(missing_metadata(a));
    out.diagnostics.extend(missing_metadata(b));
    let votes: BTreeSet<_> = [superior, posterior].into_iter().flatten().map(|r| r == Resolution::AWins).collect();
    out.resolution = if !out.diagnostics.is_empty() || votes.len() != 1 {
        Resolution::Unresolved
    } else if votes.contains(&true) {
        Resolution::AWins
    } else {
        Resolution::BWins
    };
    out
}

/// Provenance of a model atom: the nearest learned-judgment rule on its
/// support path, else the rule that directly supports it.
pub fn attribute(kb: &Kb, gp: &GroundProgram, sup: &Supports, atom: AtomId) -> SourceRef {
    let mut queue = VecDeque::from([atom]);
    let mut seen = BTreeSet::new();
    while let Some(a) = queue.pop_front() {
        if !seen.insert(a) {
            continue;
        }
        let Some(ri) = sup.rule_of(a) else { continue };
        let r = &gp.rules()[ri];
        if r.origin == Origin::LearnedJudgment {
            if let GroundHead::Choice { elements, .. } = &r.head {
                let slug = elements.iter().map(|&e| gp.atom(e)).find(|m| m.predicate == MARKER);
                if let Some(Term::Symbol(s)) = slug.and_then(|m| m.args.first()) {
                    if let Some(j) = kb.judgment_by_marker(s) {
                        return SourceRef::Judgment {
                            id: j.id.clone(),
                            citation: j.citation.clone(),
                            court_level: j.court_level,
                            date: j.date,
                            specific_over: j
                                .specific_over
                                .iter()
                                .chain(kb.program.rule(&r.rule_id).map(|x| &x.specific_over).into_iter().flatten())
                                .cloned()
                                .collect(),
                        };
                    }
                }
            }
        }
        if !sup.is_fact(a) {
            queue.extend(r.pos.iter().copied());
        }
    }
    let r = &gp.rules()[sup.rule_of(atom).expect("model atom")];
    match r.origin {
        Origin::Article if !sup.is_fact(atom) => {
            SourceRef::Article { rule_id: r.rule_id.clone(), article: kb.article_of_rule(&r.rule_id).map(str::to_string) }
        }
        _ => SourceRef::Other { rule_id: r.rule_id.clone() },
    }
}

/// Findings for every `contradiction/3` atom of one stable model.
pub fn findings_in_model(kb: &Kb, gp: &GroundProgram, model: &StableModel, sup: &Supports) -> Vec<ContradictionFinding> {
    let mut out = Vec::new();
    for atom in model.atoms() {
        if atom.predicate != CONTRADICTION || atom.args.len() != 3 {
            continue;
        }
        let id = gp.id_of(atom).expect("model atom in base");
        let r = &gp.rules()[sup.rule_of(id).expect("supported")];
        let sources = match r.pos.as_slice() {
            [x, y, ..] => (attribute(kb, gp, sup, *x), attribute(kb, gp, sup, *y)),
            _ => {
                let s = SourceRef::Other { rule_id: r.rule_id.clone() };
                (s.clone(), s)
            }
        };
        let finding = ContradictionFinding {
            atom: atom.to_string(),
            claim_a: atom.args[0].plain_text(),
            claim_b: atom.args[1].plain_text(),
            subject: atom.args[2].plain_text(),
            sources,
            resolution: Resolution::Unresolved,
            applied_maxims: Vec::new(),
            diagnostics: Vec::new(),
        };
        out.push(resolve_priority(&finding));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContradictionReport {
    pub findings: Vec<ContradictionFinding>,
    /// The program has no stable model; reported apart from findings.
    pub inconsistent: bool,
}

/// Solves the KB together with `case` and collects contradiction findings
/// across all stable models, without duplicates.
pub fn detect_contradictions(kb: &Kb, case: &Program) -> Result<ContradictionReport, super::KbError> {
    let program = kb.program.merge(case).map_err(super::KbError::DuplicateId)?;
    let gp = ground_program(&program).map_err(|e| super::KbError::Solve(e.to_string()))?;
    let mut findings: Vec<ContradictionFinding> = Vec::new();
    let mut any = false;
    for model in Solver::new(&gp) {
        any = true;
        if !model.atoms().iter().any(|a| a.predicate == CONTRADICTION) {
            continue;
        }
        let sup = Supports::compute(&gp, &model).map_err(|e| super::KbError::Solve(e.to_string()))?;
        for f in findings_in_model(kb, &gp, &model, &sup) {
            if !findings.contains(&f) {
                findings.push(f);
            }
        }
    }
    Ok(ContradictionReport { findings, inconsistent: !any })
}
