//! Abstract syntax of the supported answer-set language subset.
//!
//! The subset covers normal rules, denials and bounded choice rules with
//! conditional elements, default negation over atoms, and built-in
//! comparisons. Programs are parsed with [`parse_program`]; learning tasks
//! (background, explicit hypothesis rules, mode bias and examples) with
//! [`parse_learning_task`].

mod lexer;
mod parser;
mod print;
mod task;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

pub use parser::{parse_atom, parse_program, parse_program_named, parse_rule, ParseError};
pub use print::canonical_text;
pub use task::{
    parse_learning_task, ExampleSource, LearningTaskSource, ModeDecl, ModeFlags, ModeKind,
    ModeSchema, Placeholder, Polarity,
};

/// A term: constant symbol, quoted string, integer or variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Term {
    Int(i64),
    Symbol(String),
    Str(String),
    Var(String),
}

impl Term {
    pub fn sym(s: impl Into<String>) -> Self {
        Term::Symbol(s.into())
    }

    pub fn string(s: impl Into<String>) -> Self {
        Term::Str(s.into())
    }

    pub fn var(s: impl Into<String>) -> Self {
        Term::Var(s.into())
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    fn class(&self) -> u8 {
        match self {
            Term::Int(_) => 0,
            Term::Symbol(_) => 1,
            Term::Str(_) => 2,
            Term::Var(_) => 3,
        }
    }

    /// Text used inside natural-language labels: strings lose their quotes.
    pub fn plain_text(&self) -> String {
        match self {
            Term::Str(s) => s.clone(),
            other => other.to_string(),
        }
    }
}

/// Integers by value, then symbols, then strings, each class lexicographic.
/// Variables sort last; they never reach a ground comparison.
impl Ord for Term {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Term::Int(a), Term::Int(b)) => a.cmp(b),
            (Term::Symbol(a), Term::Symbol(b))
            | (Term::Str(a), Term::Str(b))
            | (Term::Var(a), Term::Var(b)) => a.cmp(b),
            _ => self.class().cmp(&other.class()),
        }
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Int(i) => write!(f, "{i}"),
            Term::Symbol(s) | Term::Var(s) => f.write_str(s),
            Term::Str(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
        }
    }
}

/// `predicate(args...)`; name and arity identify the predicate.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: impl Into<String>, args: Vec<Term>) -> Self {
        Atom { predicate: predicate.into(), args }
    }

    pub fn prop(predicate: impl Into<String>) -> Self {
        Atom::new(predicate, Vec::new())
    }

    pub fn signature(&self) -> Signature {
        Signature { name: self.predicate.clone(), arity: self.args.len() }
    }

    pub fn is_ground(&self) -> bool {
        !self.args.iter().any(Term::is_var)
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(|t| match t {
            Term::Var(v) => Some(v.as_str()),
            _ => None,
        })
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.predicate)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{a}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// Predicate name plus arity, written `name/arity`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Signature {
    pub name: String,
    pub arity: usize,
}

impl Signature {
    pub fn new(name: impl Into<String>, arity: usize) -> Self {
        Signature { name: name.into(), arity }
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

impl std::str::FromStr for Signature {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, arity) = s
            .rsplit_once('/')
            .ok_or_else(|| format!("expected name/arity, got `{s}`"))?;
        let arity = arity
            .trim()
            .parse()
            .map_err(|_| format!("bad arity in `{s}`"))?;
        Ok(Signature::new(name.trim(), arity))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn eval(self, left: &Term, right: &Term) -> bool {
        let ord = left.cmp(right);
        match self {
            CmpOp::Eq => ord == Ordering::Equal,
            CmpOp::Ne => ord != Ordering::Equal,
            CmpOp::Lt => ord == Ordering::Less,
            CmpOp::Le => ord != Ordering::Greater,
            CmpOp::Gt => ord == Ordering::Greater,
            CmpOp::Ge => ord != Ordering::Less,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Literal {
    Pos(Atom),
    Neg(Atom),
    Cmp { left: Term, op: CmpOp, right: Term },
}

impl Literal {
    pub fn atom(&self) -> Option<&Atom> {
        match self {
            Literal::Pos(a) | Literal::Neg(a) => Some(a),
            Literal::Cmp { .. } => None,
        }
    }

    pub fn is_positive_atom(&self) -> bool {
        matches!(self, Literal::Pos(_))
    }

    pub fn vars(&self) -> Vec<&str> {
        match self {
            Literal::Pos(a) | Literal::Neg(a) => a.vars().collect(),
            Literal::Cmp { left, right, .. } => [left, right]
                .into_iter()
                .filter_map(|t| match t {
                    Term::Var(v) => Some(v.as_str()),
                    _ => None,
                })
                .collect(),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Pos(a) => write!(f, "{a}"),
            Literal::Neg(a) => write!(f, "not {a}"),
            Literal::Cmp { left, op, right } => write!(f, "{left} {} {right}", op.symbol()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChoiceElement {
    pub atom: Atom,
    /// Positive atoms over fact-defined predicates.
    pub condition: Vec<Atom>,
}

/// `lb { a1 : cond ; ... } ub`. A missing upper bound is resolved to the
/// number of ground elements at grounding time.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChoiceHead {
    pub lower: u32,
    pub upper: Option<u32>,
    pub elements: Vec<ChoiceElement>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Head {
    Atom(Atom),
    Choice(ChoiceHead),
    /// Denial.
    None,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    #[default]
    Article,
    LearnedJudgment,
    UserEvidence,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Article => "article",
            Origin::LearnedJudgment => "learned-judgment",
            Origin::UserEvidence => "user-evidence",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "article" => Some(Origin::Article),
            "learned-judgment" => Some(Origin::LearnedJudgment),
            "user-evidence" => Some(Origin::UserEvidence),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rule {
    pub id: String,
    pub head: Head,
    pub body: Vec<Literal>,
    pub annotation: Option<String>,
    pub origin: Origin,
    /// Ids of rules or judgments this rule is declared more specific than.
    pub specific_over: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleKind {
    Normal,
    Denial,
    Choice,
}

impl Rule {
    pub fn new(id: impl Into<String>, head: Head, body: Vec<Literal>) -> Self {
        Rule {
            id: id.into(),
            head,
            body,
            annotation: None,
            origin: Origin::default(),
            specific_over: Vec::new(),
        }
    }

    pub fn kind(&self) -> RuleKind {
        match self.head {
            Head::Atom(_) => RuleKind::Normal,
            Head::Choice(_) => RuleKind::Choice,
            Head::None => RuleKind::Denial,
        }
    }

    pub fn is_fact(&self) -> bool {
        matches!(self.head, Head::Atom(_)) && self.body.is_empty()
    }

    pub fn is_denial(&self) -> bool {
        matches!(self.head, Head::None)
    }

    /// Head atom plus body literals (a denial counts only its body; a choice
    /// head counts one per element).
    pub fn length(&self) -> usize {
        let head = match &self.head {
            Head::Atom(_) => 1,
            Head::Choice(c) => c.elements.len(),
            Head::None => 0,
        };
        head + self.body.len()
    }

    pub fn head_atoms(&self) -> Vec<&Atom> {
        match &self.head {
            Head::Atom(a) => vec![a],
            Head::Choice(c) => c.elements.iter().map(|e| &e.atom).collect(),
            Head::None => Vec::new(),
        }
    }

    /// All variables in order of first occurrence (head, then body).
    pub fn variables(&self) -> Vec<String> {
        let mut seen: Vec<String> = Vec::new();
        let mut push = |v: &str| {
            if !seen.iter().any(|s| s == v) {
                seen.push(v.to_string());
            }
        };
        match &self.head {
            Head::Atom(a) => a.vars().for_each(&mut push),
            Head::Choice(c) => {
                for e in &c.elements {
                    e.atom.vars().for_each(&mut push);
                    e.condition.iter().flat_map(|a| a.vars()).for_each(&mut push);
                }
            }
            Head::None => {}
        }
        for l in &self.body {
            l.vars().into_iter().for_each(&mut push);
        }
        seen
    }

    pub fn is_ground(&self) -> bool {
        self.variables().is_empty()
    }

    /// The first variable violating safety, if any.
    ///
    /// Body variables must occur in a positive body atom. Choice element
    /// variables may additionally be bound by the element's own condition.
    pub fn unsafe_variable(&self) -> Option<String> {
        let bound: BTreeSet<&str> = self
            .body
            .iter()
            .filter_map(|l| match l {
                Literal::Pos(a) => Some(a),
                _ => None,
            })
            .flat_map(|a| a.vars())
            .collect();
        let check = |vars: Vec<&str>, extra: &BTreeSet<&str>| {
            vars.into_iter()
                .find(|v| !bound.contains(v) && !extra.contains(v))
                .map(str::to_string)
        };
        let none = BTreeSet::new();
        if let Head::Atom(a) = &self.head {
            if let Some(v) = check(a.vars().collect(), &none) {
                return Some(v);
            }
        }
        for l in &self.body {
            if let Some(v) = check(l.vars(), &none) {
                return Some(v);
            }
        }
        if let Head::Choice(c) = &self.head {
            for e in &c.elements {
                let local: BTreeSet<&str> = e.condition.iter().flat_map(|a| a.vars()).collect();
                if let Some(v) = check(e.atom.vars().collect(), &local) {
                    return Some(v);
                }
            }
        }
        None
    }

    /// Structural equality ignoring id, annotation, origin and variable names.
    pub fn same_shape(&self, other: &Rule) -> bool {
        canonical_text(self) == canonical_text(other)
    }

    /// Applies a variable substitution; unbound variables are left in place.
    pub fn substitute(&self, binding: &BTreeMap<String, Term>) -> Rule {
        let atom = |a: &Atom| substitute_atom(a, binding);
        let head = match &self.head {
            Head::Atom(a) => Head::Atom(atom(a)),
            Head::Choice(c) => Head::Choice(ChoiceHead {
                lower: c.lower,
                upper: c.upper,
                elements: c
                    .elements
                    .iter()
                    .map(|e| ChoiceElement {
                        atom: atom(&e.atom),
                        condition: e.condition.iter().map(atom).collect(),
                    })
                    .collect(),
            }),
            Head::None => Head::None,
        };
        let body = self
            .body
            .iter()
            .map(|l| match l {
                Literal::Pos(a) => Literal::Pos(atom(a)),
                Literal::Neg(a) => Literal::Neg(atom(a)),
                Literal::Cmp { left, op, right } => Literal::Cmp {
                    left: substitute_term(left, binding),
                    op: *op,
                    right: substitute_term(right, binding),
                },
            })
            .collect();
        Rule { head, body, ..self.clone() }
    }
}

pub(crate) fn substitute_term(t: &Term, binding: &BTreeMap<String, Term>) -> Term {
    match t {
        Term::Var(v) => binding.get(v).cloned().unwrap_or_else(|| t.clone()),
        other => other.clone(),
    }
}

pub(crate) fn substitute_atom(a: &Atom, binding: &BTreeMap<String, Term>) -> Atom {
    Atom {
        predicate: a.predicate.clone(),
        args: a.args.iter().map(|t| substitute_term(t, binding)).collect(),
    }
}

/// Source-form rendering, keeping the rule's own variable names.
impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print::rule_text(self))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Program {
    pub rules: Vec<Rule>,
}

impl Program {
    pub fn new(rules: Vec<Rule>) -> Self {
        Program { rules }
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    /// Trace templates keyed by rule id.
    pub fn annotations(&self) -> BTreeMap<&str, &str> {
        self.rules
            .iter()
            .filter_map(|r| r.annotation.as_deref().map(|a| (r.id.as_str(), a)))
            .collect()
    }

    pub fn rule(&self, id: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.id == id)
    }

    /// Concatenation; fails on the first duplicate rule id.
    pub fn merge(&self, other: &Program) -> Result<Program, String> {
        let mut ids: BTreeSet<&str> = self.rules.iter().map(|r| r.id.as_str()).collect();
        for r in &other.rules {
            if !ids.insert(r.id.as_str()) {
                return Err(r.id.clone());
            }
        }
        let mut rules = self.rules.clone();
        rules.extend(other.rules.iter().cloned());
        Ok(Program { rules })
    }

    /// Appends rules, renaming ids that collide with existing ones.
    pub fn extend_renaming(&mut self, rules: impl IntoIterator<Item = Rule>) {
        let mut ids: BTreeSet<String> = self.rules.iter().map(|r| r.id.clone()).collect();
        for mut r in rules {
            if ids.contains(&r.id) {
                let base = r.id.clone();
                let mut k = 2;
                while ids.contains(&format!("{base}#{k}")) {
                    k += 1;
                }
                r.id = format!("{base}#{k}");
            }
            ids.insert(r.id.clone());
            self.rules.push(r);
        }
    }

    /// Source text that parses back to an equal program, pragmas included.
    pub fn to_source(&self) -> String {
        print::program_source(self)
    }

    pub fn signatures(&self) -> BTreeSet<Signature> {
        let mut out = BTreeSet::new();
        for r in &self.rules {
            for a in r.head_atoms() {
                out.insert(a.signature());
            }
            for l in &r.body {
                if let Some(a) = l.atom() {
                    out.insert(a.signature());
                }
            }
        }
        out
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn term_order_ints_symbols_strings() {
        let mut ts = vec![
            Term::string("a"),
            Term::sym("b"),
            Term::Int(10),
            Term::sym("a"),
            Term::Int(-2),
        ];
        ts.sort();
        assert_eq!(
            ts,
            vec![Term::Int(-2), Term::Int(10), Term::sym("a"), Term::sym("b"), Term::string("a")]
        );
    }

    #[test]
    fn comparison_semantics() {
        assert!(CmpOp::Lt.eval(&Term::Int(1), &Term::Int(2)));
        assert!(CmpOp::Lt.eval(&Term::Int(100), &Term::sym("a")));
        assert!(CmpOp::Gt.eval(&Term::string("a"), &Term::sym("z")));
        assert!(CmpOp::Ne.eval(&Term::string("a"), &Term::sym("a")));
        assert!(CmpOp::Ge.eval(&Term::Int(3), &Term::Int(3)));
    }

    #[test]
    fn signature_round_trip() {
        let s: Signature = "contradiction/3".parse().unwrap();
        assert_eq!(s, Signature::new("contradiction", 3));
        assert_eq!(s.to_string(), "contradiction/3");
        assert!("nope".parse::<Signature>().is_err());
    }

    #[test]
    fn predicates_distinguished_by_arity() {
        let a = Atom::new("p", vec![Term::sym("a")]);
        let b = Atom::new("p", vec![Term::sym("a"), Term::sym("b")]);
        assert_ne!(a.signature(), b.signature());
    }

    #[test]
    fn string_escapes_render() {
        assert_eq!(Term::string("say \"hi\"").to_string(), r#""say \"hi\"""#);
        assert_eq!(Term::string("skin lesion").plain_text(), "skin lesion");
    }
}
