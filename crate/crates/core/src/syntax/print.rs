use std::collections::BTreeMap;
use std::fmt::Write;

use super::{Head, Program, Rule, Term};

/// Deterministic rendering with variables renamed `V1, V2, ...` by first
/// occurrence. Alpha-variant rules render identically.
pub fn canonical_text(rule: &Rule) -> String {
    let binding: BTreeMap<String, Term> = rule
        .variables()
        .into_iter()
        .enumerate()
        .map(|(i, v)| (v, Term::Var(format!("V{}", i + 1))))
        .collect();
    rule_text(&rule.substitute(&binding))
}

pub(crate) fn rule_text(rule: &Rule) -> String {
    let mut s = String::new();
    match &rule.head {
        Head::Atom(a) => write!(s, "{a}").unwrap(),
        Head::Choice(c) => {
            if c.lower > 0 {
                write!(s, "{}", c.lower).unwrap();
            }
            s.push('{');
            for (i, e) in c.elements.iter().enumerate() {
                if i > 0 {
                    s.push(';');
                }
                write!(s, "{}", e.atom).unwrap();
                if !e.condition.is_empty() {
                    s.push(':');
                    let cond: Vec<String> = e.condition.iter().map(|a| a.to_string()).collect();
                    s.push_str(&cond.join(","));
                }
            }
            s.push('}');
            if let Some(u) = c.upper {
                write!(s, "{u}").unwrap();
            }
        }
        Head::None => {}
    }
    if !rule.body.is_empty() {
        if !matches!(rule.head, Head::None) {
            s.push(' ');
        }
        s.push_str(":- ");
        let body: Vec<String> = rule.body.iter().map(|l| l.to_string()).collect();
        s.push_str(&body.join(", "));
    }
    s.push('.');
    s
}

fn escape_template(t: &str) -> String {
    t.replace('\\', "\\\\").replace('"', "\\\"")
}

pub(crate) fn program_source(p: &Program) -> String {
    let mut s = String::new();
    for r in &p.rules {
        writeln!(s, "%#id {}", r.id).unwrap();
        if r.origin != Default::default() {
            writeln!(s, "%#origin {}", r.origin.as_str()).unwrap();
        }
        for o in &r.specific_over {
            writeln!(s, "%#specific-over {o}").unwrap();
        }
        if let Some(a) = &r.annotation {
            writeln!(s, "%!trace \"{}\"", escape_template(a)).unwrap();
        }
        writeln!(s, "{}", rule_text(r)).unwrap();
    }
    s
}
