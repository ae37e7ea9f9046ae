//! Learning rules from examples: hypothesis spaces, brave coverage, an
//! optimal-hypothesis search and the cautious subset search.

mod space;

use std::collections::BTreeSet;
use std::fmt;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use space::{generate_hypothesis_space, SpaceOptions, DEFAULT_MAXV, DEFAULT_MAX_BODY, DEFAULT_SPACE_CAP};

use crate::ground::{ground_program, GroundError};
use crate::solve::{brave_witness, Solver, StableModel};
use crate::syntax::{canonical_text, Atom, ExampleSource, LearningTaskSource, Polarity, Program, Rule};

#[derive(Debug, Error)]
pub enum IlpError {
    #[error("no head mode declaration and no explicit hypothesis rule")]
    EmptyBias,
    #[error("the hypothesis space is empty")]
    EmptySpace,
    #[error("hypothesis space exceeds {cap} candidates; tighten the bias (#maxv, #maxbl, recall)")]
    SpaceCap { cap: usize },
    #[error("no constants declared for type `{0}`")]
    MissingConstants(String),
    #[error("unsatisfiable: no subset of the hypothesis space covers every example")]
    Unsatisfiable,
    #[error(transparent)]
    Ground(#[from] GroundError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Explicit,
    ModeGenerated,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Candidate {
    pub rule: Rule,
    pub length: usize,
    /// Canonical text, used for deduplication and tie-breaking.
    pub text: String,
    pub provenance: Provenance,
}

impl Candidate {
    pub fn new(rule: Rule, provenance: Provenance) -> Self {
        Candidate { length: rule.length(), text: canonical_text(&rule), rule, provenance }
    }
}

/// Candidates sorted by `(length, text)`, with ids `h0, h1, ...`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct HypothesisSpace {
    pub candidates: Vec<Candidate>,
}

impl HypothesisSpace {
    pub fn new(mut candidates: Vec<Candidate>) -> Self {
        candidates.sort_by(|a, b| (a.length, &a.text).cmp(&(b.length, &b.text)));
        candidates.dedup_by(|a, b| a.text == b.text);
        for (i, c) in candidates.iter_mut().enumerate() {
            c.rule.id = format!("h{i}");
        }
        HypothesisSpace { candidates }
    }

    /// Passes the given rules through unchanged (up to sorting).
    pub fn explicit(rules: impl IntoIterator<Item = Rule>) -> Self {
        Self::new(rules.into_iter().map(|r| Candidate::new(r, Provenance::Explicit)).collect())
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn hypothesis(&self, members: &[usize]) -> Hypothesis {
        Hypothesis::new(members.iter().map(|&i| self.candidates[i].clone()).collect())
    }
}

/// Space options taken from a task's `#maxv`, `#maxbl` and `#constant` lines.
pub fn space_options(task: &LearningTaskSource) -> SpaceOptions {
    SpaceOptions {
        maxv: task.maxv.unwrap_or(DEFAULT_MAXV),
        max_body: task.max_body.unwrap_or(DEFAULT_MAX_BODY),
        constants: task.constants.clone(),
        ..SpaceOptions::default()
    }
}

pub fn space_for_task(task: &LearningTaskSource) -> Result<HypothesisSpace, IlpError> {
    generate_hypothesis_space(&task.modes, &task.explicit, &space_options(task))
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Hypothesis {
    /// Members sorted by canonical text.
    pub rules: Vec<Candidate>,
    pub total_length: usize,
}

impl Hypothesis {
    pub fn new(mut rules: Vec<Candidate>) -> Self {
        rules.sort_by(|a, b| a.text.cmp(&b.text));
        rules.dedup_by(|a, b| a.text == b.text);
        let total_length = rules.iter().map(|c| c.length).sum();
        Hypothesis { rules, total_length }
    }

    pub fn texts(&self) -> Vec<&str> {
        self.rules.iter().map(|c| c.text.as_str()).collect()
    }

    /// Ordering key: total length, then sorted canonical texts.
    pub fn key(&self) -> (usize, Vec<&str>) {
        (self.total_length, self.texts())
    }

    pub fn program(&self) -> Program {
        Program::new(self.rules.iter().map(|c| c.rule.clone()).collect())
    }
}

/// One canonical rule per line.
impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.rules {
            writeln!(f, "{}", c.text)?;
        }
        Ok(())
    }
}

fn combined(parts: &[&Program]) -> Program {
    let mut p = Program::default();
    for part in parts {
        p.extend_renaming(part.rules.iter().cloned());
    }
    p
}

/// Witness model for a covered positive example, `None` otherwise. For a
/// negative example the witness is the model that violates it.
pub fn brave_check(background: &Program, hypothesis: &Program, example: &ExampleSource) -> Result<Option<StableModel>, IlpError> {
    let gp = ground_program(&combined(&[background, hypothesis, &example.context]))?;
    Ok(brave_witness(&gp, &example.inclusions, &example.exclusions))
}

/// Positive examples need some answer set realizing the pattern; negative
/// examples need none.
pub fn covers(background: &Program, hypothesis: &Hypothesis, example: &ExampleSource) -> Result<bool, IlpError> {
    covers_program(background, &hypothesis.program(), example)
}

fn covers_program(background: &Program, h: &Program, example: &ExampleSource) -> Result<bool, IlpError> {
    let found = brave_check(background, h, example)?.is_some();
    Ok(match example.polarity {
        Polarity::Pos => found,
        Polarity::Neg => !found,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coverage {
    Covered,
    Uncovered,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverageResult {
    pub per_example: Vec<Coverage>,
    /// Witness models of covered positive examples.
    pub witnesses: Vec<Option<StableModel>>,
}

impl CoverageResult {
    pub fn all_covered(&self) -> bool {
        self.per_example.iter().all(|c| *c == Coverage::Covered)
    }
}

pub fn coverage(background: &Program, hypothesis: &Hypothesis, examples: &[ExampleSource]) -> Result<CoverageResult, IlpError> {
    let h = hypothesis.program();
    let mut per_example = Vec::new();
    let mut witnesses = Vec::new();
    for e in examples {
        let w = brave_check(background, &h, e)?;
        let covered = match e.polarity {
            Polarity::Pos => w.is_some(),
            Polarity::Neg => w.is_none(),
        };
        per_example.push(if covered { Coverage::Covered } else { Coverage::Uncovered });
        witnesses.push(if e.polarity == Polarity::Pos { w } else { None });
    }
    Ok(CoverageResult { per_example, witnesses })
}

/// Wall time per search stage.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LearnReport {
    pub space_size: usize,
    pub hypotheses_checked: usize,
    pub preprocessing: Duration,
    pub space_generation: Duration,
    pub coverage_checking: Duration,
    pub counterexample_search: Duration,
    pub hypothesis_search: Duration,
}

impl LearnReport {
    pub const STAGES: [&'static str; 5] = [
        "Pre-processing",
        "Hypothesis space generation",
        "Conflict analysis (coverage checking)",
        "Counterexample search",
        "Hypothesis search",
    ];

    pub fn rows(&self) -> Vec<(&'static str, Duration)> {
        Self::STAGES
            .into_iter()
            .zip([
                self.preprocessing,
                self.space_generation,
                self.coverage_checking,
                self.counterexample_search,
                self.hypothesis_search,
            ])
            .collect()
    }

    pub fn total(&self) -> Duration {
        self.rows().iter().map(|(_, d)| *d).sum()
    }
}

impl fmt::Display for LearnReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "|S| = {}", self.space_size)?;
        writeln!(f, "hypotheses checked = {}", self.hypotheses_checked)?;
        for (name, d) in self.rows() {
            writeln!(f, "{name:<40} {:>10.3} s", d.as_secs_f64())?;
        }
        write!(f, "{:<40} {:>10.3} s", "Total", self.total().as_secs_f64())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LearnOutcome {
    pub hypothesis: Hypothesis,
    pub space: HypothesisSpace,
    pub report: LearnReport,
}

/// Learns from a parsed task: builds the space then runs [`search_optimal`].
pub fn learn_optimal(task: &LearningTaskSource) -> Result<LearnOutcome, IlpError> {
    let t0 = Instant::now();
    let background = task.background.clone();
    let preprocessing = t0.elapsed();
    let t1 = Instant::now();
    let space = space_for_task(task)?;
    let space_generation = t1.elapsed();
    let (hypothesis, mut report) = search_optimal(&background, &space, &task.examples)?;
    report.preprocessing = preprocessing;
    report.space_generation = space_generation;
    Ok(LearnOutcome { hypothesis, space, report })
}

struct Search<'a> {
    background: &'a Program,
    space: &'a HypothesisSpace,
    examples: &'a [ExampleSource],
    /// Index of the example that most recently rejected a hypothesis.
    hardest: usize,
    report: LearnReport,
}

impl Search<'_> {
    /// Checks the most recently failing example first so most rejections
    /// cost a single solver call.
    fn covers_all(&mut self, members: &[usize]) -> Result<bool, IlpError> {
        self.report.hypotheses_checked += 1;
        let h = self.space.hypothesis(members).program();
        let t = Instant::now();
        let n = self.examples.len();
        for k in 0..n {
            let i = (self.hardest + k) % n;
            if !covers_program(self.background, &h, &self.examples[i])? {
                self.hardest = i;
                self.report.coverage_checking += t.elapsed();
                return Ok(false);
            }
        }
        self.report.coverage_checking += t.elapsed();
        Ok(true)
    }

    /// Subsets of `space[from..]` with total length exactly `budget`, in
    /// lexicographic order of member indices.
    fn level(
        &mut self,
        from: usize,
        budget: usize,
        chosen: &mut Vec<usize>,
        best: &mut Option<Hypothesis>,
    ) -> Result<(), IlpError> {
        if budget == 0 {
            if self.covers_all(chosen)? {
                let h = self.space.hypothesis(chosen);
                if best.as_ref().is_none_or(|b| h.key() < b.key()) {
                    *best = Some(h);
                }
            }
            return Ok(());
        }
        for i in from..self.space.len() {
            let len = self.space.candidates[i].length;
            if len > budget {
                break;
            }
            chosen.push(i);
            self.level(i + 1, budget - len, chosen, best)?;
            chosen.pop();
        }
        Ok(())
    }
}

/// Iterative deepening on total length: the first level holding a covering
/// subset yields the answer, ties broken by sorted canonical texts.
pub fn search_optimal(
    background: &Program,
    space: &HypothesisSpace,
    examples: &[ExampleSource],
) -> Result<(Hypothesis, LearnReport), IlpError> {
    let start = Instant::now();
    let mut search = Search {
        background,
        space,
        examples,
        hardest: 0,
        report: LearnReport { space_size: space.len(), ..Default::default() },
    };
    let max_total: usize = space.candidates.iter().map(|c| c.length).sum();
    let mut found = None;
    for budget in 0..=max_total {
        let mut best = None;
        search.level(0, budget, &mut Vec::new(), &mut best)?;
        if best.is_some() {
            found = best;
            break;
        }
    }
    let mut report = search.report;
    report.hypothesis_search = start.elapsed().saturating_sub(report.coverage_checking);
    let hypothesis = found.ok_or(IlpError::Unsatisfiable)?;
    let t = Instant::now();
    let recheck = coverage(background, &hypothesis, examples)?;
    debug_assert!(recheck.all_covered());
    report.counterexample_search = t.elapsed();
    Ok((hypothesis, report))
}

/// Reference search over every subset of a space of at most 12 candidates.
pub fn exhaustive_optimal(
    background: &Program,
    space: &HypothesisSpace,
    examples: &[ExampleSource],
) -> Option<Result<Hypothesis, IlpError>> {
    if space.len() > 12 {
        return None;
    }
    let mut best: Option<Hypothesis> = None;
    for mask in 0u32..(1 << space.len()) {
        let members: Vec<usize> = (0..space.len()).filter(|i| mask & (1 << i) != 0).collect();
        let h = space.hypothesis(&members);
        let ok = examples.iter().try_fold(true, |acc, e| Ok::<_, IlpError>(acc && covers(background, &h, e)?));
        match ok {
            Err(e) => return Some(Err(e)),
            Ok(true) if best.as_ref().is_none_or(|b| h.key() < b.key()) => best = Some(h),
            Ok(_) => {}
        }
    }
    Some(best.ok_or(IlpError::Unsatisfiable))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CautiousOptions {
    /// Accept an inconsistent `B ∪ H` as the printed pseudocode does.
    pub literal_pseudocode: bool,
}

/// Subsets of the space ordered by total length and then sorted canonical texts.
pub fn subsets_by_length(space: &HypothesisSpace) -> Vec<Hypothesis> {
    assert!(space.len() < 24, "subset enumeration is limited to small spaces");
    let mut all: Vec<Hypothesis> = (0u32..(1 << space.len()))
        .map(|mask| space.hypothesis(&(0..space.len()).filter(|i| mask & (1 << i) != 0).collect::<Vec<_>>()))
        .collect();
    all.sort_by(|a, b| a.key().cmp(&b.key()));
    all
}

/// Whether `B ∪ H` cautiously satisfies the examples: every stable model
/// contains `e_plus` and avoids `e_minus`; with consistency required unless
/// the literal flag is set.
pub fn cautiously_satisfies(
    background: &Program,
    h: &Hypothesis,
    e_plus: &BTreeSet<Atom>,
    e_minus: &BTreeSet<Atom>,
    opts: CautiousOptions,
) -> Result<bool, IlpError> {
    let gp = ground_program(&combined(&[background, &h.program()]))?;
    let mut consistent = false;
    for m in Solver::new(&gp) {
        consistent = true;
        if !e_plus.iter().all(|a| m.contains(a)) || e_minus.iter().any(|a| m.contains(a)) {
            return Ok(false);
        }
    }
    Ok(consistent || opts.literal_pseudocode)
}

/// Start from the empty hypothesis and add candidates in order of
/// increasing total length; return the first `H` whose models all
/// contain `e_plus` and avoid `e_minus`.
pub fn cautious_learn(
    background: &Program,
    space: &HypothesisSpace,
    e_plus: &BTreeSet<Atom>,
    e_minus: &BTreeSet<Atom>,
    opts: CautiousOptions,
) -> Result<Option<Hypothesis>, IlpError> {
    for h in subsets_by_length(space) {
        if cautiously_satisfies(background, &h, e_plus, e_minus, opts)? {
            return Ok(Some(h));
        }
    }
    Ok(None)
}
