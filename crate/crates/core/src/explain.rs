//! Explanations of a stable model: a support DAG and an annotated
//! justification tree.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ground::{unify, AtomId, GroundHead, GroundProgram, GroundRule};
use crate::solve::{is_stable, StableModel};
use crate::syntax::{parse_atom, Atom, ParseError};

pub const DAG_SCHEMA: &str = "juris.explanation-dag/1";
pub const TREE_SCHEMA: &str = "juris.justification-tree/1";

#[derive(Debug, Error)]
pub enum ExplainError {
    #[error("the given model is not a stable model of the program")]
    NotStable,
    #[error("atom {0} is not in the model")]
    NotInModel(Atom),
    #[error("malformed explanation document: {0}")]
    Document(String),
}

impl From<ParseError> for ExplainError {
    fn from(e: ParseError) -> Self {
        ExplainError::Document(e.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Fact,
    Derived,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DagNode {
    pub atom: Atom,
    pub kind: NodeKind,
    /// Supported by a choice rule, i.e. an assumption.
    pub choice: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DagEdge {
    pub from: Atom,
    pub rule: String,
    pub to: Vec<Atom>,
    pub negated: Vec<Atom>,
}

/// One chosen support per model atom. Nodes follow atom order; edges follow
/// node order.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ExplanationDag {
    pub nodes: Vec<DagNode>,
    pub edges: Vec<DagEdge>,
}

/// Index of the supporting ground rule for every model atom.
#[derive(Clone, Debug)]
pub struct Supports {
    by_atom: Vec<Option<usize>>,
    facts: Vec<bool>,
}

impl Supports {
    pub fn compute(gp: &GroundProgram, model: &StableModel) -> Result<Self, ExplainError> {
        let ids = model.ids(gp);
        if ids.len() != model.len() || !is_stable(gp, &ids) {
            return Err(ExplainError::NotStable);
        }
        let n = gp.len();
        let mut in_model = vec![false; n];
        for &a in &ids {
            in_model[a] = true;
        }
        let mut by_atom = vec![None; n];
        let mut facts = vec![false; n];
        for (ri, r) in gp.rules().iter().enumerate() {
            if let GroundHead::Atom(h) = r.head {
                if r.is_fact() && by_atom[h].is_none() {
                    by_atom[h] = Some(ri);
                    facts[h] = true;
                }
            }
        }
        let mut explained: Vec<bool> = by_atom.iter().map(Option::is_some).collect();
        let mut pending: Vec<AtomId> = ids.iter().copied().filter(|&a| !explained[a]).collect();
        while !pending.is_empty() {
            let prev = explained.clone();
            let mut progress = false;
            pending.retain(|&a| {
                let found = gp.rules().iter().position(|r| {
                    r.head_atoms().contains(&a)
                        && r.pos.iter().all(|&b| prev[b])
                        && r.neg.iter().all(|&b| !in_model[b])
                });
                match found {
                    Some(ri) => {
                        by_atom[a] = Some(ri);
                        explained[a] = true;
                        progress = true;
                        false
                    }
                    None => true,
                }
            });
            if !progress {
                return Err(ExplainError::NotStable);
            }
        }
        Ok(Supports { by_atom, facts })
    }

    pub fn rule_of(&self, a: AtomId) -> Option<usize> {
        self.by_atom.get(a).copied().flatten()
    }

    pub fn is_fact(&self, a: AtomId) -> bool {
        self.facts.get(a).copied().unwrap_or(false)
    }
}

/// Builds the support DAG of a stable model.
pub fn support_dag(gp: &GroundProgram, model: &StableModel) -> Result<ExplanationDag, ExplainError> {
    let sup = Supports::compute(gp, model)?;
    let mut dag = ExplanationDag::default();
    for a in model.ids(gp) {
        let r = &gp.rules()[sup.rule_of(a).expect("every model atom is supported")];
        let atom = gp.atom(a).clone();
        if sup.is_fact(a) {
            dag.nodes.push(DagNode { atom, kind: NodeKind::Fact, choice: false });
            continue;
        }
        let choice = matches!(r.head, GroundHead::Choice { .. });
        dag.nodes.push(DagNode { atom: atom.clone(), kind: NodeKind::Derived, choice });
        dag.edges.push(DagEdge {
            from: atom,
            rule: r.rule_id.clone(),
            to: r.pos.iter().map(|&b| gp.atom(b).clone()).collect(),
            negated: r.neg.iter().map(|&b| gp.atom(b).clone()).collect(),
        });
    }
    Ok(dag)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DagFormat {
    Dot,
    Json,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct DotOptions {
    /// Draw negated body atoms as dashed edges to pseudo-nodes.
    pub show_negated: bool,
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

impl ExplanationDag {
    pub fn node(&self, atom: &Atom) -> Option<&DagNode> {
        self.nodes.iter().find(|n| &n.atom == atom)
    }

    pub fn edge_from(&self, atom: &Atom) -> Option<&DagEdge> {
        self.edges.iter().find(|e| &e.from == atom)
    }

    pub fn fact_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Fact).count()
    }

    /// Kahn's algorithm over support edges; `None` on a cycle.
    pub fn topological_order(&self) -> Option<Vec<&Atom>> {
        let index = |a: &Atom| self.nodes.iter().position(|n| &n.atom == a);
        let n = self.nodes.len();
        let mut pending = vec![0usize; n];
        let mut users: Vec<Vec<usize>> = vec![Vec::new(); n];
        for e in &self.edges {
            let from = index(&e.from)?;
            for t in &e.to {
                let t = index(t)?;
                pending[from] += 1;
                users[t].push(from);
            }
        }
        let mut ready: Vec<usize> = (0..n).filter(|&i| pending[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = ready.pop() {
            order.push(&self.nodes[i].atom);
            for &u in &users[i] {
                pending[u] -= 1;
                if pending[u] == 0 {
                    ready.push(u);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    /// The part of the DAG that `root` depends on.
    pub fn restricted_to(&self, root: &Atom) -> Option<ExplanationDag> {
        self.node(root)?;
        let mut keep: BTreeSet<&Atom> = BTreeSet::new();
        let mut stack = vec![root];
        while let Some(a) = stack.pop() {
            if keep.insert(a) {
                if let Some(e) = self.edge_from(a) {
                    stack.extend(e.to.iter());
                }
            }
        }
        Some(ExplanationDag {
            nodes: self.nodes.iter().filter(|n| keep.contains(&n.atom)).cloned().collect(),
            edges: self.edges.iter().filter(|e| keep.contains(&e.from)).cloned().collect(),
        })
    }

    pub fn export(&self, format: DagFormat) -> String {
        match format {
            DagFormat::Dot => self.to_dot(DotOptions::default()),
            DagFormat::Json => self.to_json(),
        }
    }

    pub fn to_dot(&self, opts: DotOptions) -> String {
        let mut s = String::from("digraph explanation {\n  rankdir=BT;\n  node [shape=box, style=\"rounded,filled\"];\n");
        for (i, n) in self.nodes.iter().enumerate() {
            let (fill, font) = match n.kind {
                NodeKind::Fact => ("darkgreen", "white"),
                NodeKind::Derived => ("palegreen", "black"),
            };
            let extra = if n.choice { ", peripheries=2" } else { "" };
            writeln!(
                s,
                "  n{i} [label=\"{}\", fillcolor={fill}, fontcolor={font}, kind={}{extra}];",
                dot_escape(&n.atom.to_string()),
                match n.kind {
                    NodeKind::Fact => "fact",
                    NodeKind::Derived => "derived",
                }
            )
            .unwrap();
        }
        let index = |a: &Atom| self.nodes.iter().position(|n| &n.atom == a);
        let mut absent: Vec<&Atom> = Vec::new();
        for e in &self.edges {
            let Some(from) = index(&e.from) else { continue };
            for t in &e.to {
                if let Some(t) = index(t) {
                    writeln!(s, "  n{from} -> n{t} [label=\"{}\"];", dot_escape(&e.rule)).unwrap();
                }
            }
            if opts.show_negated {
                for t in &e.negated {
                    let k = absent.iter().position(|a| *a == t).unwrap_or_else(|| {
                        absent.push(t);
                        absent.len() - 1
                    });
                    writeln!(s, "  n{from} -> x{k} [label=\"{}\", style=dashed];", dot_escape(&e.rule)).unwrap();
                }
            }
        }
        for (k, a) in absent.iter().enumerate() {
            writeln!(s, "  x{k} [label=\"not {}\", style=dashed, fillcolor=white];", dot_escape(&a.to_string())).unwrap();
        }
        s.push_str("}\n");
        s
    }

    pub fn to_document(&self) -> DagDocument {
        DagDocument {
            schema: DAG_SCHEMA.to_string(),
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeDoc { atom: n.atom.to_string(), kind: n.kind, choice: n.choice })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeDoc {
                    from: e.from.to_string(),
                    rule: e.rule.clone(),
                    to: e.to.iter().map(Atom::to_string).collect(),
                    negated: e.negated.iter().map(Atom::to_string).collect(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("serializable")
    }

    pub fn from_document(doc: &DagDocument) -> Result<Self, ExplainError> {
        if doc.schema != DAG_SCHEMA {
            return Err(ExplainError::Document(format!("unknown schema `{}`", doc.schema)));
        }
        let atoms = |v: &[String]| v.iter().map(|s| parse_atom(s)).collect::<Result<Vec<_>, _>>();
        let nodes = doc
            .nodes
            .iter()
            .map(|n| Ok(DagNode { atom: parse_atom(&n.atom)?, kind: n.kind, choice: n.choice }))
            .collect::<Result<Vec<_>, ParseError>>()?;
        let edges = doc
            .edges
            .iter()
            .map(|e| {
                Ok(DagEdge { from: parse_atom(&e.from)?, rule: e.rule.clone(), to: atoms(&e.to)?, negated: atoms(&e.negated)? })
            })
            .collect::<Result<Vec<_>, ParseError>>()?;
        Ok(ExplanationDag { nodes, edges })
    }

    pub fn from_json(text: &str) -> Result<Self, ExplainError> {
        let doc: DagDocument = serde_json::from_str(text).map_err(|e| ExplainError::Document(e.to_string()))?;
        Self::from_document(&doc)
    }
}

/// Wire form of [`ExplanationDag`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DagDocument {
    pub schema: String,
    pub nodes: Vec<NodeDoc>,
    pub edges: Vec<EdgeDoc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeDoc {
    pub atom: String,
    pub kind: NodeKind,
    #[serde(default)]
    pub choice: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeDoc {
    pub from: String,
    pub rule: String,
    pub to: Vec<String>,
    #[serde(default)]
    pub negated: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeNode {
    pub label: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<TreeNode>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JustificationTree {
    pub schema: String,
    pub root: TreeNode,
}

impl JustificationTree {
    /// Text rendering, one node per line with a trailing newline.
    pub fn render(&self) -> String {
        fn walk(n: &TreeNode, depth: usize, out: &mut String) {
            for _ in 1..depth {
                out.push_str("|  ");
            }
            out.push_str("|__");
            out.push_str(&n.label);
            out.push('\n');
            for c in &n.children {
                walk(c, depth + 1, out);
            }
        }
        let mut out = String::new();
        walk(&self.root, 1, &mut out);
        out
    }

    pub fn line_count(&self) -> usize {
        fn count(n: &TreeNode) -> usize {
            1 + n.children.iter().map(count).sum::<usize>()
        }
        count(&self.root)
    }
}

/// Fills `{Name}` from the rule binding, or from matching the explained atom
/// against the choice elements, and `{k}` from the k-th argument of the
/// explained atom. Unknown placeholders are left untouched.
pub fn fill_template(template: &str, rule: &GroundRule, atom: &Atom) -> String {
    let mut out = String::new();
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let Some(close) = after.find('}') else {
            out.push_str(&rest[open..]);
            return out;
        };
        let key = &after[..close];
        let local = || rule.element_patterns.iter().find_map(|p| unify(p, atom, &rule.binding)?.get(key).cloned());
        let value = rule.binding.get(key).cloned().or_else(local).map(|t| t.plain_text()).or_else(|| {
            key.parse::<usize>()
                .ok()
                .filter(|&k| k >= 1 && k <= atom.args.len())
                .map(|k| atom.args[k - 1].plain_text())
        });
        match value {
            Some(v) => out.push_str(&v),
            None => {
                out.push('{');
                out.push_str(key);
                out.push('}');
            }
        }
        rest = &after[close + 1..];
    }
    out.push_str(rest);
    out
}

/// A choice head that leaves room for more than one selection.
pub fn is_free_choice(head: &GroundHead) -> bool {
    match head {
        GroundHead::Choice { lower, upper, elements } => {
            let n = elements.len() as u32;
            !(*lower == n && *upper >= n)
        }
        _ => false,
    }
}

struct TreeBuilder<'a> {
    gp: &'a GroundProgram,
    sup: &'a Supports,
    bare: bool,
}

impl TreeBuilder<'_> {
    fn rule(&self, a: AtomId) -> &GroundRule {
        &self.gp.rules()[self.sup.rule_of(a).expect("model atom")]
    }

    fn label(&self, a: AtomId) -> Option<String> {
        let r = self.rule(a);
        let atom = self.gp.atom(a);
        if let Some(t) = &r.annotation {
            return Some(fill_template(t, r, atom));
        }
        if is_free_choice(&r.head) {
            return Some(format!("{atom} chosen by {}", r.rule_id));
        }
        self.bare.then(|| atom.to_string())
    }

    /// Derived body atoms come before facts; body order is kept otherwise.
    fn children(&self, a: AtomId) -> Vec<TreeNode> {
        if self.sup.is_fact(a) {
            return Vec::new();
        }
        let r = self.rule(a);
        let (derived, facts): (Vec<AtomId>, Vec<AtomId>) = r.pos.iter().partition(|&&b| !self.sup.is_fact(b));
        let mut out: Vec<TreeNode> = Vec::new();
        for b in derived.into_iter().chain(facts) {
            for node in self.explain(b) {
                if !out.contains(&node) {
                    out.push(node);
                }
            }
        }
        out
    }

    fn explain(&self, a: AtomId) -> Vec<TreeNode> {
        match self.label(a) {
            Some(label) => vec![TreeNode { label, children: self.children(a) }],
            None => self.children(a),
        }
    }
}

fn closure_has_annotation(gp: &GroundProgram, sup: &Supports, root: AtomId) -> bool {
    let mut seen = BTreeSet::new();
    let mut stack = vec![root];
    while let Some(a) = stack.pop() {
        if !seen.insert(a) {
            continue;
        }
        let r = &gp.rules()[sup.rule_of(a).expect("model atom")];
        if r.annotation.is_some() {
            return true;
        }
        if !sup.is_fact(a) {
            stack.extend(r.pos.iter().copied());
        }
    }
    false
}

/// Builds the justification tree of `query` from precomputed supports.
pub fn justification_tree_with(
    gp: &GroundProgram,
    sup: &Supports,
    model: &StableModel,
    query: &Atom,
) -> Result<JustificationTree, ExplainError> {
    let q = match gp.id_of(query) {
        Some(q) if model.contains(query) => q,
        _ => return Err(ExplainError::NotInModel(query.clone())),
    };
    let bare = !closure_has_annotation(gp, sup, q);
    let b = TreeBuilder { gp, sup, bare };
    let root = TreeNode { label: b.label(q).unwrap_or_else(|| query.to_string()), children: b.children(q) };
    Ok(JustificationTree { schema: TREE_SCHEMA.to_string(), root })
}

/// Annotated justification tree for one atom of a stable model.
pub fn justification_tree(gp: &GroundProgram, model: &StableModel, query: &Atom) -> Result<JustificationTree, ExplainError> {
    if !model.contains(query) {
        return Err(ExplainError::NotInModel(query.clone()));
    }
    let sup = Supports::compute(gp, model)?;
    justification_tree_with(gp, &sup, model, query)
}
