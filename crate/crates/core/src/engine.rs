//! Case solving shared by the command line and the HTTP service: a session
//! program is the KB plus case facts plus evidence denials, and each stable
//! model becomes a scenario.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::explain::{fill_template, is_free_choice, justification_tree_with, ExplainError, ExplanationDag, JustificationTree, Supports};
use crate::ground::{ground_program, GroundProgram};
use crate::kb::{facts_program, findings_in_model, ContradictionFinding, Kb, MARKER};
use crate::solve::{Solver, StableModel};
use crate::syntax::{parse_atom, parse_rule, Atom, Head, Origin, Program, Rule, Signature};
use crate::verify::{add_evidence_constraint, VerifyError};

pub const SCENARIOS_SCHEMA: &str = "juris.scenarios/1";

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid fact `{text}`: {message}")]
    InvalidFact { text: String, message: String },
    #[error("invalid constraint `{text}`: {message}")]
    InvalidConstraint { text: String, message: String },
    #[error("grounding failed: {0}")]
    Ground(String),
    #[error(transparent)]
    Explain(#[from] ExplainError),
}

/// Parses one ground fact; a trailing period is optional.
pub fn parse_fact(text: &str) -> Result<Atom, EngineError> {
    let t = text.trim().trim_end_matches('.').trim();
    let err = |message: String| EngineError::InvalidFact { text: text.to_string(), message };
    let atom = parse_atom(t).map_err(|e| err(e.to_string()))?;
    if !atom.is_ground() {
        return Err(err("facts must be ground".into()));
    }
    Ok(atom)
}

/// Parses and validates a denial submitted as evidence.
pub fn parse_constraint(text: &str) -> Result<Rule, EngineError> {
    let err = |message: String| EngineError::InvalidConstraint { text: text.to_string(), message };
    let mut t = text.trim().to_string();
    if !t.ends_with('.') {
        t.push('.');
    }
    let rule = parse_rule(&t).map_err(|e| err(e.to_string()))?;
    add_evidence_constraint(&Program::default(), &rule).map_err(|e| match e {
        VerifyError::NotADenial(_) => err("evidence must be a denial `:- body.`".into()),
        other => err(other.to_string()),
    })?;
    Ok(rule)
}

/// KB, facts and evidence denials as one program.
pub fn session_program(kb: &Program, facts: &[Atom], constraints: &[Rule]) -> Program {
    let mut p = kb.clone();
    p.extend_renaming(facts_program("case", facts).rules);
    p.extend_renaming(constraints.iter().enumerate().map(|(i, c)| {
        let mut c = Rule::new(format!("evidence:{i}"), Head::None, c.body.clone());
        c.origin = Origin::UserEvidence;
        c
    }));
    p
}

/// An atom supported by a choice rule that could have chosen otherwise.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assumption {
    pub atom: String,
    pub label: String,
    pub rule: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgmentUse {
    pub marker: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub judgment: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub citation: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub index: usize,
    /// The model projected on the verdict manifest.
    pub verdicts: Vec<String>,
    pub assumptions: Vec<Assumption>,
    /// Empty when every conclusion rests on articles alone.
    pub judgments: Vec<JudgmentUse>,
    pub contradictions: Vec<ContradictionFinding>,
    pub model: StableModel,
}

impl Scenario {
    pub fn uses_judgments(&self) -> bool {
        !self.judgments.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioSet {
    pub schema: String,
    /// No stable model: the case facts or evidence clash with the KB.
    pub inconsistent: bool,
    pub scenarios: Vec<Scenario>,
}

/// A grounded session, solved once; scenarios keep the solver's order.
pub struct SolvedCase {
    pub ground: GroundProgram,
    pub models: Vec<StableModel>,
}

impl SolvedCase {
    pub fn solve(program: &Program, limit: Option<usize>) -> Result<Self, EngineError> {
        let ground = ground_program(program).map_err(|e| EngineError::Ground(e.to_string()))?;
        let models = {
            let s = Solver::new(&ground);
            match limit {
                Some(k) => s.take(k).collect(),
                None => s.collect(),
            }
        };
        Ok(SolvedCase { ground, models })
    }

    pub fn scenario(&self, kb: &Kb, verdicts: &BTreeSet<Signature>, index: usize) -> Result<Scenario, EngineError> {
        let model = &self.models[index];
        let gp = &self.ground;
        let sup = Supports::compute(gp, model)?;
        let mut assumptions = Vec::new();
        for a in model.ids(gp) {
            let r = &gp.rules()[sup.rule_of(a).expect("model atom")];
            let atom = gp.atom(a);
            if atom.predicate == MARKER || !is_free_choice(&r.head) {
                continue;
            }
            let label = match &r.annotation {
                Some(t) => fill_template(t, r, atom),
                None => format!("{atom} chosen by {}", r.rule_id),
            };
            assumptions.push(Assumption { atom: atom.to_string(), label, rule: r.rule_id.clone() });
        }
        let judgments = model
            .atoms()
            .iter()
            .filter(|a| a.predicate == MARKER && a.args.len() == 1)
            .map(|a| {
                let slug = a.args[0].plain_text();
                let j = kb.judgment_by_marker(&slug);
                JudgmentUse { marker: a.to_string(), judgment: j.map(|j| j.id.clone()), citation: j.map(|j| j.citation.clone()) }
            })
            .collect();
        Ok(Scenario {
            index,
            verdicts: model.atoms().iter().filter(|a| verdicts.contains(&a.signature())).map(Atom::to_string).collect(),
            assumptions,
            judgments,
            contradictions: findings_in_model(kb, gp, model, &sup),
            model: model.clone(),
        })
    }

    pub fn scenarios(&self, kb: &Kb) -> Result<ScenarioSet, EngineError> {
        let verdicts = kb.verdicts();
        let scenarios = (0..self.models.len()).map(|i| self.scenario(kb, &verdicts, i)).collect::<Result<_, _>>()?;
        Ok(ScenarioSet { schema: SCENARIOS_SCHEMA.to_string(), inconsistent: self.models.is_empty(), scenarios })
    }

    pub fn dag(&self, index: usize) -> Result<ExplanationDag, EngineError> {
        Ok(crate::explain::support_dag(&self.ground, &self.models[index])?)
    }

    pub fn tree(&self, index: usize, query: &Atom) -> Result<JustificationTree, EngineError> {
        let model = &self.models[index];
        if !model.contains(query) {
            return Err(ExplainError::NotInModel(query.clone()).into());
        }
        let sup = Supports::compute(&self.ground, model)?;
        Ok(justification_tree_with(&self.ground, &sup, model, query)?)
    }
}

/// Solves a case against the KB and describes every scenario.
pub fn case_scenarios(kb: &Kb, facts: &[Atom], constraints: &[Rule]) -> Result<ScenarioSet, EngineError> {
    SolvedCase::solve(&session_program(&kb.program, facts, constraints), None)?.scenarios(kb)
}
