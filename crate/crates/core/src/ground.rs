//! Instantiation of non-ground programs.
//!
//! Grounding first computes an over-approximation of the derivable atoms by
//! a bottom-up fixpoint that ignores default negation and treats every choice
//! element as derivable. Rules are then instantiated by joining their positive
//! bodies against that set, so instances whose positive body can never hold
//! are never produced. Comparisons are evaluated during the join; instances
//! with a false comparison are dropped and true comparisons vanish from the
//! body. The result has the same stable models as full Herbrand instantiation.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::syntax::{
    substitute_atom, Atom, ChoiceElement, ChoiceHead, CmpOp, Head, Literal, Origin, Program, Rule,
    Signature, Term,
};

pub type AtomId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroundError {
    #[error("rule {rule}: choice condition `{predicate}` must be defined by facts only")]
    ConditionNotDomain { rule: String, predicate: Signature },
    #[error("rule {rule}: unsafe variable `{variable}`")]
    Unsafe { rule: String, variable: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum GroundHead {
    Atom(AtomId),
    Choice { lower: u32, upper: u32, elements: Vec<AtomId> },
    None,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundRule {
    /// Id of the rule this instance came from.
    pub rule_id: String,
    pub head: GroundHead,
    /// Positive body atoms in body order.
    pub pos: Vec<AtomId>,
    pub neg: Vec<AtomId>,
    /// Substitution that produced the instance.
    pub binding: BTreeMap<String, Term>,
    /// Choice element atoms with only the rule-level variables substituted,
    /// so element-local variables can be recovered from a chosen atom.
    pub element_patterns: Vec<Atom>,
    pub annotation: Option<String>,
    pub origin: Origin,
}

impl GroundRule {
    pub fn is_fact(&self) -> bool {
        matches!(self.head, GroundHead::Atom(_)) && self.pos.is_empty() && self.neg.is_empty()
    }

    pub fn head_atoms(&self) -> &[AtomId] {
        match &self.head {
            GroundHead::Atom(a) => std::slice::from_ref(a),
            GroundHead::Choice { elements, .. } => elements,
            GroundHead::None => &[],
        }
    }
}

/// A variable-free program over an indexed Herbrand base. Atom ids follow the
/// sorted order of the atoms.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GroundProgram {
    atoms: Vec<Atom>,
    index: HashMap<Atom, AtomId>,
    rules: Vec<GroundRule>,
}

impl GroundProgram {
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atom(&self, id: AtomId) -> &Atom {
        &self.atoms[id]
    }

    pub fn id_of(&self, atom: &Atom) -> Option<AtomId> {
        self.index.get(atom).copied()
    }

    pub fn rules(&self) -> &[GroundRule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn herbrand_base(&self) -> BTreeSet<Atom> {
        self.atoms.iter().cloned().collect()
    }

    /// Converts back into a (ground) syntax-level program.
    pub fn to_program(&self) -> Program {
        let rules = self
            .rules
            .iter()
            .enumerate()
            .map(|(i, r)| self.rule_syntax(r, format!("{}@{i}", r.rule_id)))
            .collect();
        Program::new(rules)
    }

    pub fn rule_syntax(&self, r: &GroundRule, id: String) -> Rule {
        let head = match &r.head {
            GroundHead::Atom(a) => Head::Atom(self.atoms[*a].clone()),
            GroundHead::Choice { lower, upper, elements } => Head::Choice(ChoiceHead {
                lower: *lower,
                upper: Some(*upper),
                elements: elements
                    .iter()
                    .map(|&e| ChoiceElement { atom: self.atoms[e].clone(), condition: Vec::new() })
                    .collect(),
            }),
            GroundHead::None => Head::None,
        };
        let body = r
            .pos
            .iter()
            .map(|&a| Literal::Pos(self.atoms[a].clone()))
            .chain(r.neg.iter().map(|&a| Literal::Neg(self.atoms[a].clone())))
            .collect();
        let mut rule = Rule::new(id, head, body);
        rule.annotation = r.annotation.clone();
        rule.origin = r.origin;
        rule
    }
}

/// Writes the ground program in `.lp` syntax.
impl fmt::Display for GroundProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "{}", self.rule_syntax(r, r.rule_id.clone()))?;
        }
        Ok(())
    }
}

/// Incremental construction of ground programs; `finish` sorts the atoms.
#[derive(Default)]
pub struct GroundProgramBuilder {
    atoms: Vec<Atom>,
    index: HashMap<Atom, AtomId>,
    rules: Vec<GroundRule>,
}

impl GroundProgramBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn atom(&mut self, atom: Atom) -> AtomId {
        if let Some(&id) = self.index.get(&atom) {
            return id;
        }
        let id = self.atoms.len();
        self.index.insert(atom.clone(), id);
        self.atoms.push(atom);
        id
    }

    pub fn rule(&mut self, rule: GroundRule) {
        self.rules.push(rule);
    }

    /// Convenience for hand-built programs.
    pub fn add(&mut self, id: impl Into<String>, head: GroundHead, pos: Vec<AtomId>, neg: Vec<AtomId>) {
        self.rules.push(GroundRule {
            rule_id: id.into(),
            head,
            pos,
            neg,
            binding: BTreeMap::new(),
            element_patterns: Vec::new(),
            annotation: None,
            origin: Origin::default(),
        });
    }

    pub fn finish(self) -> GroundProgram {
        let mut order: Vec<AtomId> = (0..self.atoms.len()).collect();
        order.sort_by(|&a, &b| self.atoms[a].cmp(&self.atoms[b]));
        let mut remap = vec![0; self.atoms.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old] = new;
        }
        let atoms: Vec<Atom> = order.iter().map(|&i| self.atoms[i].clone()).collect();
        let index = atoms.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
        let m = |v: &[AtomId]| v.iter().map(|&a| remap[a]).collect::<Vec<_>>();
        let rules = self
            .rules
            .into_iter()
            .map(|r| GroundRule {
                head: match r.head {
                    GroundHead::Atom(a) => GroundHead::Atom(remap[a]),
                    GroundHead::Choice { lower, upper, elements } => {
                        GroundHead::Choice { lower, upper, elements: m(&elements) }
                    }
                    GroundHead::None => GroundHead::None,
                },
                pos: m(&r.pos),
                neg: m(&r.neg),
                ..r
            })
            .collect();
        GroundProgram { atoms, index, rules }
    }
}

/// Ground atoms indexed by predicate signature, sorted for deterministic joins.
#[derive(Clone, Debug, Default)]
pub struct AtomStore {
    by_sig: HashMap<Signature, BTreeSet<Atom>>,
}

impl AtomStore {
    pub fn insert(&mut self, a: Atom) -> bool {
        self.by_sig.entry(a.signature()).or_default().insert(a)
    }

    pub fn contains(&self, a: &Atom) -> bool {
        self.by_sig.get(&a.signature()).is_some_and(|s| s.contains(a))
    }

    fn candidates(&self, sig: &Signature) -> impl Iterator<Item = &Atom> {
        self.by_sig.get(sig).into_iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.by_sig.values().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Facts of a program plus the set of predicates defined only by facts.
#[derive(Clone, Debug, Default)]
pub struct DomainFacts {
    facts: AtomStore,
    non_domain: HashSet<Signature>,
}

impl DomainFacts {
    pub fn from_program(p: &Program) -> Self {
        let mut d = DomainFacts::default();
        for r in &p.rules {
            match &r.head {
                Head::Atom(a) if r.body.is_empty() && a.is_ground() => {
                    d.facts.insert(a.clone());
                }
                _ => {
                    for a in r.head_atoms() {
                        d.non_domain.insert(a.signature());
                    }
                }
            }
        }
        d
    }

    pub fn is_domain(&self, sig: &Signature) -> bool {
        !self.non_domain.contains(sig)
    }

    pub fn facts(&self) -> &AtomStore {
        &self.facts
    }
}

/// Ground element atoms of a choice head whose outer variables are already
/// substituted; condition-local variables range over the domain facts.
pub fn expand_conditional_choice(head: &ChoiceHead, domain: &DomainFacts) -> Result<Vec<Atom>, GroundError> {
    expand_choice(head, &BTreeMap::new(), domain, "<choice>")
}

fn expand_choice(
    head: &ChoiceHead,
    binding: &BTreeMap<String, Term>,
    domain: &DomainFacts,
    rule_id: &str,
) -> Result<Vec<Atom>, GroundError> {
    let mut out = Vec::new();
    for e in &head.elements {
        for c in &e.condition {
            if !domain.is_domain(&c.signature()) {
                return Err(GroundError::ConditionNotDomain {
                    rule: rule_id.to_string(),
                    predicate: c.signature(),
                });
            }
        }
        let cond: Vec<&Atom> = e.condition.iter().collect();
        let mut local = Vec::new();
        join(&cond, &[], &domain.facts, binding.clone(), &mut |b| {
            local.push(substitute_atom(&e.atom, b));
        });
        for a in local {
            if !a.is_ground() {
                let v = a.vars().next().unwrap_or_default().to_string();
                return Err(GroundError::Unsafe { rule: rule_id.to_string(), variable: v });
            }
            if !out.contains(&a) {
                out.push(a);
            }
        }
    }
    Ok(out)
}

/// Extends `binding` so that `pattern` equals `ground`.
pub fn unify(pattern: &Atom, ground: &Atom, binding: &BTreeMap<String, Term>) -> Option<BTreeMap<String, Term>> {
    if pattern.predicate != ground.predicate || pattern.args.len() != ground.args.len() {
        return None;
    }
    let mut b = binding.clone();
    for (p, g) in pattern.args.iter().zip(&ground.args) {
        match p {
            Term::Var(v) => match b.get(v) {
                Some(t) if t != g => return None,
                Some(_) => {}
                None => {
                    b.insert(v.clone(), g.clone());
                }
            },
            t if t != g => return None,
            _ => {}
        }
    }
    Some(b)
}

type Cmp<'a> = (&'a Term, CmpOp, &'a Term);

fn cmp_holds(c: &Cmp<'_>, b: &BTreeMap<String, Term>) -> Option<bool> {
    let resolve = |t: &Term| match t {
        Term::Var(v) => b.get(v).cloned(),
        other => Some(other.clone()),
    };
    Some(c.1.eval(&resolve(c.0)?, &resolve(c.2)?))
}

/// Enumerates bindings of `atoms` against `store`, pruning on comparisons as
/// soon as their variables are bound.
fn join(
    atoms: &[&Atom],
    cmps: &[Cmp<'_>],
    store: &AtomStore,
    binding: BTreeMap<String, Term>,
    f: &mut dyn FnMut(&BTreeMap<String, Term>),
) {
    if cmps.iter().any(|c| cmp_holds(c, &binding) == Some(false)) {
        return;
    }
    let Some((first, rest)) = atoms.split_first() else {
        f(&binding);
        return;
    };
    let sig = first.signature();
    for cand in store.candidates(&sig) {
        if let Some(b) = unify(first, cand, &binding) {
            join(rest, cmps, store, b, f);
        }
    }
}

struct Parts<'a> {
    pos: Vec<&'a Atom>,
    neg: Vec<&'a Atom>,
    cmps: Vec<Cmp<'a>>,
}

fn parts(r: &Rule) -> Parts<'_> {
    let mut p = Parts { pos: Vec::new(), neg: Vec::new(), cmps: Vec::new() };
    for l in &r.body {
        match l {
            Literal::Pos(a) => p.pos.push(a),
            Literal::Neg(a) => p.neg.push(a),
            Literal::Cmp { left, op, right } => p.cmps.push((left, *op, right)),
        }
    }
    p
}

fn all_bindings(r: &Rule, store: &AtomStore) -> Vec<BTreeMap<String, Term>> {
    let p = parts(r);
    let mut out = Vec::new();
    join(&p.pos, &p.cmps, store, BTreeMap::new(), &mut |b| {
        if p.cmps.iter().all(|c| cmp_holds(c, b) == Some(true)) {
            out.push(b.clone());
        }
    });
    out
}

/// Instantiates a safe program.
pub fn ground_program(program: &Program) -> Result<GroundProgram, GroundError> {
    for r in &program.rules {
        if let Some(v) = r.unsafe_variable() {
            return Err(GroundError::Unsafe { rule: r.id.clone(), variable: v });
        }
    }
    let domain = DomainFacts::from_program(program);

    let mut possible = AtomStore::default();
    loop {
        let mut fresh = Vec::new();
        for r in &program.rules {
            if r.is_denial() {
                continue;
            }
            for b in all_bindings(r, &possible) {
                match &r.head {
                    Head::Atom(a) => fresh.push(substitute_atom(a, &b)),
                    Head::Choice(c) => fresh.extend(expand_choice(c, &b, &domain, &r.id)?),
                    Head::None => {}
                }
            }
        }
        let before = possible.len();
        for a in fresh {
            possible.insert(a);
        }
        if possible.len() == before {
            break;
        }
    }

    let mut builder = GroundProgramBuilder::new();
    for r in &program.rules {
        let p = parts(r);
        for b in all_bindings(r, &possible) {
            let pos = p.pos.iter().map(|a| builder.atom(substitute_atom(a, &b))).collect();
            let neg = p.neg.iter().map(|a| builder.atom(substitute_atom(a, &b))).collect();
            let head = match &r.head {
                Head::Atom(a) => GroundHead::Atom(builder.atom(substitute_atom(a, &b))),
                Head::Choice(c) => {
                    let elements: Vec<AtomId> = expand_choice(c, &b, &domain, &r.id)?
                        .into_iter()
                        .map(|a| builder.atom(a))
                        .collect();
                    let upper = c.upper.unwrap_or(elements.len() as u32);
                    GroundHead::Choice { lower: c.lower, upper, elements }
                }
                Head::None => GroundHead::None,
            };
            let element_patterns = match &r.head {
                Head::Choice(c) => c.elements.iter().map(|e| substitute_atom(&e.atom, &b)).collect(),
                _ => Vec::new(),
            };
            builder.rule(GroundRule {
                rule_id: r.id.clone(),
                head,
                pos,
                neg,
                binding: b,
                element_patterns,
                annotation: r.annotation.clone(),
                origin: r.origin,
            });
        }
    }
    Ok(builder.finish())
}
