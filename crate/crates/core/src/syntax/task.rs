//! Learning-task files: background rules, `N ~ rule.` hypothesis entries,
//! mode bias (`#modeh`, `#modeha`, `#modeb`, `#modec`, `#maxv`, `#maxbl`,
//! `#constant`) and `#pos`/`#neg` examples.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::lexer::{tokenize, Tok};
use super::parser::{ParseError, Parser};
use super::{Atom, CmpOp, Program, Rule, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeKind {
    /// `#modeh`
    Head,
    /// `#modeha`; treated as `#modeh` since aggregates are outside the subset.
    HeadAggregate,
    /// `#modeb`
    Body,
    /// `#modec`
    Condition,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Placeholder {
    Var(String),
    Const(String),
    Fixed(Term),
}

impl fmt::Display for Placeholder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Placeholder::Var(t) => write!(f, "var({t})"),
            Placeholder::Const(t) => write!(f, "const({t})"),
            Placeholder::Fixed(t) => write!(f, "{t}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeSchema {
    Atom { predicate: String, args: Vec<Placeholder> },
    Comparison { left: Placeholder, op: CmpOp, right: Placeholder },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeFlags {
    pub positive: bool,
    pub symmetric: bool,
    pub anti_reflexive: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeDecl {
    pub kind: ModeKind,
    /// Maximum occurrences in one body (`#modeb` only; 1 otherwise).
    pub recall: u32,
    pub schema: ModeSchema,
    pub flags: ModeFlags,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarity {
    Pos,
    Neg,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleSource {
    pub polarity: Polarity,
    pub inclusions: BTreeSet<Atom>,
    pub exclusions: BTreeSet<Atom>,
    pub context: Program,
}

impl ExampleSource {
    pub fn new(
        polarity: Polarity,
        inclusions: impl IntoIterator<Item = Atom>,
        exclusions: impl IntoIterator<Item = Atom>,
        context: Program,
    ) -> Self {
        ExampleSource {
            polarity,
            inclusions: inclusions.into_iter().collect(),
            exclusions: exclusions.into_iter().collect(),
            context,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LearningTaskSource {
    pub background: Program,
    /// `(length, rule)` pairs from `N ~ rule.` entries.
    pub explicit: Vec<(usize, Rule)>,
    pub modes: Vec<ModeDecl>,
    pub maxv: Option<usize>,
    pub max_body: Option<usize>,
    /// Constant pools for `const(t)` placeholders.
    pub constants: BTreeMap<String, Vec<Term>>,
    pub examples: Vec<ExampleSource>,
}

pub fn parse_learning_task(src: &str) -> Result<LearningTaskSource, ParseError> {
    let mut p = Parser::new(tokenize(src)?, "task");
    let mut task = LearningTaskSource::default();
    loop {
        p.pragmas()?;
        let line = p.line();
        match p.peek().clone() {
            Tok::Eof => break,
            Tok::Directive(d) => {
                p.next();
                directive(&mut p, &mut task, &d, line)?;
            }
            Tok::Int(n) if *p.peek_at(1) == Tok::Tilde => {
                p.next();
                p.next();
                let mut rules = p.statement()?;
                if rules.len() != 1 {
                    return Err(ParseError::Task { line, message: "expected one rule after `~`".into() });
                }
                let rule = rules.remove(0);
                let length = usize::try_from(n)
                    .map_err(|_| ParseError::Task { line, message: format!("negative length {n}") })?;
                if length != rule.length() {
                    return Err(ParseError::Task {
                        line,
                        message: format!(
                            "declared length {length} but the rule has {} components",
                            rule.length()
                        ),
                    });
                }
                task.explicit.push((length, rule));
            }
            _ => {
                let rules = p.statement()?;
                task.background.rules.extend(rules);
            }
        }
    }
    Ok(task)
}

fn directive(p: &mut Parser, task: &mut LearningTaskSource, d: &str, line: usize) -> Result<(), ParseError> {
    match d {
        "pos" | "neg" => {
            let polarity = if d == "pos" { Polarity::Pos } else { Polarity::Neg };
            p.expect(&Tok::LParen)?;
            // optional example identifier
            if matches!(p.peek(), Tok::Ident(_)) && *p.peek_at(1) == Tok::Comma {
                p.next();
                p.next();
            }
            let inclusions = ground_set(p)?;
            p.expect(&Tok::Comma)?;
            let exclusions = ground_set(p)?;
            let mut context = Program::default();
            if p.eat(&Tok::Comma) {
                p.expect(&Tok::LBrace)?;
                while !p.at(&Tok::RBrace) {
                    if p.at(&Tok::Eof) {
                        return Err(p.error("unterminated example context"));
                    }
                    context.rules.extend(p.statement()?);
                }
                p.expect(&Tok::RBrace)?;
            }
            p.expect(&Tok::RParen)?;
            p.expect(&Tok::Dot)?;
            if let Some(a) = inclusions.intersection(&exclusions).next() {
                return Err(ParseError::Task {
                    line,
                    message: format!("`{a}` is both included and excluded"),
                });
            }
            task.examples.push(ExampleSource { polarity, inclusions, exclusions, context });
        }
        "modeh" | "modeha" | "modeb" => {
            let kind = match d {
                "modeh" => ModeKind::Head,
                "modeha" => ModeKind::HeadAggregate,
                _ => ModeKind::Body,
            };
            p.expect(&Tok::LParen)?;
            let mut recall = 1;
            if let Tok::Int(n) = p.peek().clone() {
                if kind != ModeKind::Body {
                    return Err(ParseError::ModeSchema { line, message: "recall is only allowed on #modeb".into() });
                }
                if n < 1 {
                    return Err(ParseError::ModeSchema { line, message: format!("recall {n} must be at least 1") });
                }
                recall = u32::try_from(n).map_err(|_| ParseError::ModeSchema {
                    line,
                    message: format!("recall {n} out of range"),
                })?;
                p.next();
                p.expect(&Tok::Comma)?;
            }
            let schema = schema_atom(p, line)?;
            let flags = flags(p, line)?;
            p.expect(&Tok::RParen)?;
            p.expect(&Tok::Dot)?;
            push_mode(task, ModeDecl { kind, recall, schema, flags }, line)?;
        }
        "modec" => {
            p.expect(&Tok::LParen)?;
            let left = placeholder(p, line)?;
            let op = match p.next() {
                Tok::Cmp(op) => op,
                other => {
                    return Err(ParseError::ModeSchema {
                        line,
                        message: format!("expected comparison in #modec, found {}", other.describe()),
                    })
                }
            };
            let right = placeholder(p, line)?;
            let flags = flags(p, line)?;
            p.expect(&Tok::RParen)?;
            p.expect(&Tok::Dot)?;
            let schema = ModeSchema::Comparison { left, op, right };
            push_mode(task, ModeDecl { kind: ModeKind::Condition, recall: 1, schema, flags }, line)?;
        }
        "maxv" | "maxbl" => {
            p.expect(&Tok::LParen)?;
            let n = p.expect_int()?;
            p.expect(&Tok::RParen)?;
            p.expect(&Tok::Dot)?;
            let n = usize::try_from(n)
                .map_err(|_| ParseError::Task { line, message: format!("#{d} must be non-negative") })?;
            if d == "maxv" {
                task.maxv = Some(n);
            } else {
                task.max_body = Some(n);
            }
        }
        "constant" => {
            p.expect(&Tok::LParen)?;
            let ty = p.expect_ident()?;
            p.expect(&Tok::Comma)?;
            let value = p.term()?;
            if value.is_var() {
                return Err(ParseError::Task { line, message: "constants must be ground".into() });
            }
            p.expect(&Tok::RParen)?;
            p.expect(&Tok::Dot)?;
            let pool = task.constants.entry(ty).or_default();
            if !pool.contains(&value) {
                pool.push(value);
            }
        }
        other => {
            return Err(ParseError::Task { line, message: format!("unknown directive `#{other}`") });
        }
    }
    Ok(())
}

fn push_mode(task: &mut LearningTaskSource, m: ModeDecl, line: usize) -> Result<(), ParseError> {
    let arity = match &m.schema {
        ModeSchema::Atom { args, .. } => args.len(),
        ModeSchema::Comparison { .. } => 2,
    };
    if (m.flags.symmetric || m.flags.anti_reflexive) && arity != 2 {
        return Err(ParseError::ModeSchema {
            line,
            message: "`symmetric` and `anti_reflexive` need a binary schema".into(),
        });
    }
    task.modes.push(m);
    Ok(())
}

fn ground_set(p: &mut Parser) -> Result<BTreeSet<Atom>, ParseError> {
    p.expect(&Tok::LBrace)?;
    let mut out = BTreeSet::new();
    if !p.at(&Tok::RBrace) {
        loop {
            let line = p.line();
            let a = p.atom()?;
            if !a.is_ground() {
                return Err(ParseError::NonGroundExample { line, atom: a.to_string() });
            }
            out.insert(a);
            if !p.eat(&Tok::Comma) {
                break;
            }
        }
    }
    p.expect(&Tok::RBrace)?;
    Ok(out)
}

fn placeholder(p: &mut Parser, line: usize) -> Result<Placeholder, ParseError> {
    if let Tok::Ident(kw) = p.peek().clone() {
        if (kw == "var" || kw == "const") && *p.peek_at(1) == Tok::LParen {
            p.next();
            p.next();
            let ty = p.expect_ident().map_err(|_| ParseError::ModeSchema {
                line,
                message: format!("`{kw}(...)` expects a type name"),
            })?;
            p.expect(&Tok::RParen)?;
            return Ok(if kw == "var" { Placeholder::Var(ty) } else { Placeholder::Const(ty) });
        }
    }
    let t = p.term()?;
    if t.is_var() {
        return Err(ParseError::ModeSchema { line, message: format!("bare variable `{t}` in mode schema") });
    }
    Ok(Placeholder::Fixed(t))
}

fn schema_atom(p: &mut Parser, line: usize) -> Result<ModeSchema, ParseError> {
    let predicate = p.expect_ident().map_err(|_| ParseError::ModeSchema {
        line,
        message: "expected a predicate schema".into(),
    })?;
    let mut args = Vec::new();
    if p.eat(&Tok::LParen) {
        loop {
            args.push(placeholder(p, line)?);
            if !p.eat(&Tok::Comma) {
                break;
            }
        }
        p.expect(&Tok::RParen)?;
    }
    Ok(ModeSchema::Atom { predicate, args })
}

fn flags(p: &mut Parser, line: usize) -> Result<ModeFlags, ParseError> {
    let mut f = ModeFlags::default();
    if !p.eat(&Tok::Comma) {
        return Ok(f);
    }
    let parens = p.eat(&Tok::LParen);
    loop {
        match p.expect_ident()?.as_str() {
            "positive" => f.positive = true,
            "symmetric" => f.symmetric = true,
            "anti_reflexive" => f.anti_reflexive = true,
            other => {
                return Err(ParseError::ModeSchema { line, message: format!("unknown mode flag `{other}`") })
            }
        }
        if !parens || !p.eat(&Tok::Comma) {
            break;
        }
    }
    if parens {
        p.expect(&Tok::RParen)?;
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{canonical_text, parse_atom};

    #[test]
    fn positive_example_block() {
        let t = parse_learning_task(
            r#"#pos({beatings("R", "V"),
      damage("R", "V")},
     {derive_illness("V")},
     {harmful_intention("R").
      slap("R", "V").})."#,
        )
        .unwrap();
        assert_eq!(t.examples.len(), 1);
        let e = &t.examples[0];
        assert_eq!(e.polarity, Polarity::Pos);
        let inc: BTreeSet<_> = ["beatings(\"R\",\"V\")", "damage(\"R\",\"V\")"]
            .iter()
            .map(|s| parse_atom(s).unwrap())
            .collect();
        assert_eq!(e.inclusions, inc);
        assert_eq!(e.exclusions, [parse_atom("derive_illness(\"V\")").unwrap()].into());
        let ctx: Vec<String> = e.context.rules.iter().map(|r| r.to_string()).collect();
        assert_eq!(ctx, ["harmful_intention(\"R\").", "slap(\"R\",\"V\")."]);
    }

    #[test]
    fn explicit_entry_with_length() {
        let t = parse_learning_task("5 ~ damage(R, V) :- slap(R, V), agent(V), agent(R), R!=V.").unwrap();
        assert_eq!(t.explicit.len(), 1);
        let (len, rule) = &t.explicit[0];
        assert_eq!(*len, 5);
        assert_eq!(
            canonical_text(rule),
            "damage(V1,V2) :- slap(V1,V2), agent(V2), agent(V1), V1 != V2."
        );
    }

    #[test]
    fn explicit_length_must_match() {
        assert!(parse_learning_task("4 ~ damage(R, V) :- slap(R, V), agent(V), agent(R), R!=V.").is_err());
    }

    #[test]
    fn empty_example() {
        let t = parse_learning_task("#pos({},{},{}).").unwrap();
        let e = &t.examples[0];
        assert!(e.inclusions.is_empty() && e.exclusions.is_empty() && e.context.is_empty());
    }

    #[test]
    fn mode_declarations() {
        let t = parse_learning_task(
            "#modeh(damage(var(agent), var(agent)), (anti_reflexive, positive)).\n\
             #modeb(1, slap(var(agent), var(agent)), (anti_reflexive, positive)).\n\
             #modeb(2, level(var(obj), const(lvl))).\n\
             #modec(var(lvl) > var(lvl)).\n\
             #maxv(2).\n#constant(lvl, 3).",
        )
        .unwrap();
        assert_eq!(t.modes.len(), 4);
        assert_eq!(t.maxv, Some(2));
        assert_eq!(t.modes[1].recall, 1);
        assert_eq!(t.modes[2].recall, 2);
        assert!(t.modes[0].flags.anti_reflexive && t.modes[0].flags.positive);
        assert_eq!(t.constants["lvl"], vec![Term::Int(3)]);
        assert!(matches!(t.modes[3].schema, ModeSchema::Comparison { op: CmpOp::Gt, .. }));
    }

    #[test]
    fn symmetric_needs_binary_schema() {
        let err = parse_learning_task("#modeb(1, p(var(t)), (symmetric)).").unwrap_err();
        assert!(matches!(err, ParseError::ModeSchema { .. }));
    }

    #[test]
    fn non_ground_inclusion_rejected() {
        let err = parse_learning_task("#pos({p(X)},{},{}).").unwrap_err();
        assert!(matches!(err, ParseError::NonGroundExample { .. }));
    }

    #[test]
    fn malformed_schema_rejected() {
        assert!(parse_learning_task("#modeh(p(var(1))).").is_err());
        assert!(parse_learning_task("#modeb(0, p(var(t))).").is_err());
        assert!(parse_learning_task("#modeh(p(X)).").is_err());
    }

    #[test]
    fn background_rules_collected() {
        let t = parse_learning_task("agent(\"R\").\nbeatings(R,V) :- damage(R,V), harmful_intention(R).\n#neg({a},{},{}).").unwrap();
        assert_eq!(t.background.len(), 2);
        assert_eq!(t.examples[0].polarity, Polarity::Neg);
    }
}
