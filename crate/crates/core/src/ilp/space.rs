//! Hypothesis-space generation from mode declarations.

use std::collections::{BTreeMap, BTreeSet};

use super::{Candidate, HypothesisSpace, IlpError, Provenance};
use crate::syntax::{
    canonical_text, Atom, CmpOp, Head, Literal, ModeDecl, ModeKind, ModeSchema, Placeholder, Rule, Term,
};

pub const DEFAULT_MAXV: usize = 3;
pub const DEFAULT_MAX_BODY: usize = 3;
pub const DEFAULT_SPACE_CAP: usize = 1_000_000;

#[derive(Clone, Debug)]
pub struct SpaceOptions {
    /// Maximum number of distinct variables per rule.
    pub maxv: usize,
    /// Maximum number of mode-bias body literals (guards and comparisons excluded).
    pub max_body: usize,
    pub cap: usize,
    pub constants: BTreeMap<String, Vec<Term>>,
}

impl Default for SpaceOptions {
    fn default() -> Self {
        SpaceOptions { maxv: DEFAULT_MAXV, max_body: DEFAULT_MAX_BODY, cap: DEFAULT_SPACE_CAP, constants: BTreeMap::new() }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
enum Group {
    Comparison,
    Guard,
    Literal,
}

#[derive(Clone, Debug)]
struct Draft {
    types: Vec<String>,
    head: Atom,
    body: Vec<(Group, Literal)>,
}

fn var(i: usize) -> Term {
    Term::Var(format!("V{}", i + 1))
}

fn oriented(left: Term, op: CmpOp, right: Term) -> Literal {
    let (left, right) = if matches!(op, CmpOp::Eq | CmpOp::Ne) && right < left { (right, left) } else { (left, right) };
    Literal::Cmp { left, op, right }
}

fn literal_text(l: &Literal) -> String {
    l.to_string()
}

/// Argument terms paired with the types of the variables in scope after them.
type Instantiation = (Vec<Term>, Vec<String>);

/// Instantiations of a placeholder list. Variables may reuse an existing
/// variable of the same type or open a new one while under `maxv`.
fn instantiate(
    args: &[Placeholder],
    types: &[String],
    maxv: usize,
    allow_new: bool,
    constants: &BTreeMap<String, Vec<Term>>,
) -> Result<Vec<Instantiation>, IlpError> {
    let mut out = vec![(Vec::new(), types.to_vec())];
    for p in args {
        let mut next = Vec::new();
        for (terms, tys) in out {
            match p {
                Placeholder::Fixed(t) => {
                    let mut terms = terms.clone();
                    terms.push(t.clone());
                    next.push((terms, tys));
                }
                Placeholder::Const(t) => {
                    let pool = constants.get(t).ok_or_else(|| IlpError::MissingConstants(t.clone()))?;
                    for c in pool {
                        let mut terms = terms.clone();
                        terms.push(c.clone());
                        next.push((terms, tys.clone()));
                    }
                }
                Placeholder::Var(t) => {
                    for (i, ty) in tys.iter().enumerate() {
                        if ty == t {
                            let mut terms = terms.clone();
                            terms.push(var(i));
                            next.push((terms, tys.clone()));
                        }
                    }
                    if allow_new && tys.len() < maxv {
                        let mut terms = terms.clone();
                        terms.push(var(tys.len()));
                        let mut tys = tys.clone();
                        tys.push(t.clone());
                        next.push((terms, tys));
                    }
                }
            }
        }
        out = next;
    }
    Ok(out)
}

/// Applies the anti-reflexive flag: `None` when both arguments coincide,
/// otherwise the inequality to add (if both are variables).
fn anti_reflexive(decl: &ModeDecl, terms: &[Term]) -> Option<Option<Literal>> {
    if !decl.flags.anti_reflexive || terms.len() != 2 {
        return Some(None);
    }
    if terms[0] == terms[1] {
        return None;
    }
    if terms[0].is_var() && terms[1].is_var() {
        return Some(Some(oriented(terms[0].clone(), CmpOp::Ne, terms[1].clone())));
    }
    Some(None)
}

fn mode_atom(decl: &ModeDecl) -> Option<(&str, &[Placeholder])> {
    match &decl.schema {
        ModeSchema::Atom { predicate, args } => Some((predicate, args)),
        ModeSchema::Comparison { .. } => None,
    }
}

struct Generator<'a> {
    opts: &'a SpaceOptions,
    body_modes: Vec<&'a ModeDecl>,
    conditions: Vec<&'a ModeDecl>,
    symmetric: BTreeSet<String>,
    out: BTreeMap<String, Rule>,
}

impl Generator<'_> {
    fn extend(&mut self, draft: &Draft, start: usize, uses: &mut Vec<u32>, literals: usize) -> Result<(), IlpError> {
        self.emit_with_conditions(draft, 0)?;
        if literals >= self.opts.max_body {
            return Ok(());
        }
        for s in start..self.body_modes.len() {
            let decl = self.body_modes[s];
            if uses[s] >= decl.recall {
                continue;
            }
            let (pred, args) = mode_atom(decl).expect("body modes are atoms");
            for (terms, types) in instantiate(args, &draft.types, self.opts.maxv, true, &self.opts.constants)? {
                let Some(ineq) = anti_reflexive(decl, &terms) else { continue };
                let atom = Atom::new(pred, terms);
                let signs: &[bool] = if decl.flags.positive { &[false] } else { &[false, true] };
                for &negated in signs {
                    if negated && types.len() > draft.types.len() {
                        continue;
                    }
                    let mut next = draft.clone();
                    next.types = types.clone();
                    if let Some(l) = &ineq {
                        next.body.push((Group::Comparison, l.clone()));
                    }
                    let lit = if negated { Literal::Neg(atom.clone()) } else { Literal::Pos(atom.clone()) };
                    next.body.push((Group::Literal, lit));
                    uses[s] += 1;
                    self.extend(&next, s, uses, literals + 1)?;
                    uses[s] -= 1;
                }
            }
        }
        Ok(())
    }

    fn emit_with_conditions(&mut self, draft: &Draft, k: usize) -> Result<(), IlpError> {
        if k == self.conditions.len() {
            return self.emit(draft);
        }
        self.emit_with_conditions(draft, k + 1)?;
        let ModeSchema::Comparison { left, op, right } = &self.conditions[k].schema else {
            unreachable!("conditions are comparisons")
        };
        let pair = [left.clone(), right.clone()];
        for (terms, _) in instantiate(&pair, &draft.types, self.opts.maxv, false, &self.opts.constants)? {
            if terms[0] == terms[1] {
                continue;
            }
            let mut next = draft.clone();
            next.body.push((Group::Comparison, oriented(terms[0].clone(), *op, terms[1].clone())));
            self.emit_with_conditions(&next, k + 1)?;
        }
        Ok(())
    }

    fn emit(&mut self, draft: &Draft) -> Result<(), IlpError> {
        let bound: BTreeSet<&str> = draft
            .body
            .iter()
            .filter(|(g, l)| *g == Group::Literal && l.is_positive_atom())
            .flat_map(|(_, l)| l.vars())
            .collect();
        if (0..draft.types.len()).any(|i| !bound.contains(format!("V{}", i + 1).as_str())) {
            return Ok(());
        }
        let mut body = draft.body.clone();
        for (i, t) in draft.types.iter().enumerate() {
            body.push((Group::Guard, Literal::Pos(Atom::new(t.clone(), vec![var(i)]))));
        }
        let mut best: Option<(String, Rule)> = None;
        let sym_positions: Vec<usize> = body
            .iter()
            .enumerate()
            .filter(|(_, (g, l))| {
                *g == Group::Literal && l.atom().is_some_and(|a| a.args.len() == 2 && self.symmetric.contains(&a.predicate))
            })
            .map(|(i, _)| i)
            .collect();
        for mask in 0u32..(1 << sym_positions.len()) {
            let mut variant = body.clone();
            for (bit, &pos) in sym_positions.iter().enumerate() {
                if mask & (1 << bit) != 0 {
                    variant[pos].1 = swap_args(&variant[pos].1);
                }
            }
            let rule = normalize(&draft.head, variant);
            let text = canonical_text(&rule);
            if best.as_ref().is_none_or(|(t, _)| text < *t) {
                best = Some((text, rule));
            }
        }
        let (text, rule) = best.expect("at least one variant");
        self.out.entry(text).or_insert(rule);
        if self.out.len() > self.opts.cap {
            return Err(IlpError::SpaceCap { cap: self.opts.cap });
        }
        Ok(())
    }
}

fn swap_args(l: &Literal) -> Literal {
    let flip = |a: &Atom| Atom::new(a.predicate.clone(), vec![a.args[1].clone(), a.args[0].clone()]);
    match l {
        Literal::Pos(a) => Literal::Pos(flip(a)),
        Literal::Neg(a) => Literal::Neg(flip(a)),
        other => other.clone(),
    }
}

/// Sorts each body group and renames variables by first occurrence until the
/// rule stops changing. Duplicate literals are dropped.
fn normalize(head: &Atom, mut body: Vec<(Group, Literal)>) -> Rule {
    let mut head = head.clone();
    for _ in 0..8 {
        body.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| literal_text(&a.1).cmp(&literal_text(&b.1))));
        body.dedup();
        let rule = Rule::new("h", Head::Atom(head.clone()), body.iter().map(|(_, l)| l.clone()).collect());
        let renaming: BTreeMap<String, Term> =
            rule.variables().into_iter().enumerate().map(|(i, v)| (v, var(i))).collect();
        let renamed = rule.substitute(&renaming);
        let Head::Atom(h) = &renamed.head else { unreachable!() };
        let next: Vec<(Group, Literal)> = body
            .iter()
            .zip(renamed.body.iter())
            .map(|((g, _), l)| match l {
                Literal::Cmp { left, op, right } => (*g, oriented(left.clone(), *op, right.clone())),
                l => (*g, l.clone()),
            })
            .collect();
        let stable = next == body && *h == head;
        head = h.clone();
        body = next;
        if stable {
            break;
        }
    }
    Rule::new("h", Head::Atom(head), body.into_iter().map(|(_, l)| l).collect())
}

/// Builds the candidate set from mode declarations and explicit entries.
pub fn generate_hypothesis_space(
    modes: &[ModeDecl],
    explicit: &[(usize, Rule)],
    opts: &SpaceOptions,
) -> Result<HypothesisSpace, IlpError> {
    let heads: Vec<&ModeDecl> =
        modes.iter().filter(|m| matches!(m.kind, ModeKind::Head | ModeKind::HeadAggregate)).collect();
    if heads.is_empty() && explicit.is_empty() {
        return Err(IlpError::EmptyBias);
    }
    let mut gen = Generator {
        opts,
        body_modes: modes.iter().filter(|m| m.kind == ModeKind::Body && mode_atom(m).is_some()).collect(),
        conditions: modes
            .iter()
            .filter(|m| matches!(m.schema, ModeSchema::Comparison { .. }))
            .collect(),
        symmetric: modes
            .iter()
            .filter(|m| m.kind == ModeKind::Body && m.flags.symmetric)
            .filter_map(|m| mode_atom(m).map(|(p, _)| p.to_string()))
            .collect(),
        out: BTreeMap::new(),
    };
    for decl in &heads {
        let Some((pred, args)) = mode_atom(decl) else { continue };
        for (terms, types) in instantiate(args, &[], opts.maxv, true, &opts.constants)? {
            let Some(ineq) = anti_reflexive(decl, &terms) else { continue };
            let draft = Draft {
                types,
                head: Atom::new(pred, terms),
                body: ineq.into_iter().map(|l| (Group::Comparison, l)).collect(),
            };
            let mut uses = vec![0; gen.body_modes.len()];
            gen.extend(&draft, 0, &mut uses, 0)?;
        }
    }
    let mut candidates: BTreeMap<String, Candidate> = BTreeMap::new();
    for (_, rule) in explicit {
        let text = canonical_text(rule);
        candidates.entry(text.clone()).or_insert_with(|| Candidate::new(rule.clone(), Provenance::Explicit));
    }
    for (text, rule) in gen.out {
        candidates.entry(text).or_insert_with(|| Candidate::new(rule, Provenance::ModeGenerated));
    }
    if candidates.is_empty() {
        return Err(IlpError::EmptySpace);
    }
    Ok(HypothesisSpace::new(candidates.into_values().collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_learning_task;

    fn space(src: &str) -> Vec<String> {
        let task = parse_learning_task(src).unwrap();
        let opts = SpaceOptions {
            maxv: task.maxv.unwrap_or(DEFAULT_MAXV),
            max_body: task.max_body.unwrap_or(DEFAULT_MAX_BODY),
            constants: task.constants.clone(),
            ..Default::default()
        };
        generate_hypothesis_space(&task.modes, &task.explicit, &opts)
            .unwrap()
            .candidates
            .iter()
            .map(|c| c.text.clone())
            .collect()
    }

    #[test]
    fn damage_bias() {
        let s = space(
            "#modeh(damage(var(agent), var(agent)), (anti_reflexive, positive)).\n\
             #modeb(1, slap(var(agent), var(agent)), (anti_reflexive, positive)).\n#maxv(2).",
        );
        assert_eq!(
            s,
            [
                "damage(V1,V2) :- V1 != V2, agent(V1), agent(V2), slap(V1,V2).",
                "damage(V1,V2) :- V1 != V2, agent(V1), agent(V2), slap(V2,V1).",
            ]
        );
    }

    #[test]
    fn explicit_passthrough() {
        let s = space("3 ~ p(X) :- q(X), r(X).\n2 ~ p(X) :- q(X).");
        assert_eq!(s, ["p(V1) :- q(V1).", "p(V1) :- q(V1), r(V1)."]);
    }

    #[test]
    fn symmetric_keeps_one_orientation() {
        let s = space("#modeh(p(var(t))).\n#modeb(1, q(var(t), var(t)), (symmetric)).\n#maxv(2).");
        assert!(s.contains(&"p(V1) :- t(V1), t(V2), q(V1,V2).".to_string()), "{s:?}");
        assert!(!s.contains(&"p(V1) :- t(V1), t(V2), q(V2,V1).".to_string()));
    }

    #[test]
    fn constants_and_conditions() {
        let s = space("#modeh(p(var(n))).\n#modeb(1, q(var(n), const(c))).\n#constant(c, a).\n#modec(var(n) > var(n)).\n#maxv(1).");
        assert!(s.contains(&"p(V1) :- n(V1), q(V1,a).".to_string()), "{s:?}");
        assert!(s.iter().all(|c| !c.contains('>')), "a single variable leaves no comparison");
    }

    #[test]
    fn missing_head_is_error() {
        let task = parse_learning_task("#modeb(1, q(var(t))).").unwrap();
        assert!(matches!(
            generate_hypothesis_space(&task.modes, &[], &SpaceOptions::default()),
            Err(IlpError::EmptyBias)
        ));
    }

    #[test]
    fn cap_is_enforced() {
        let task = parse_learning_task("#modeh(p(var(t))).\n#modeb(3, q(var(t), var(t))).").unwrap();
        let opts = SpaceOptions { cap: 5, ..Default::default() };
        assert!(matches!(generate_hypothesis_space(&task.modes, &[], &opts), Err(IlpError::SpaceCap { .. })));
    }
}
