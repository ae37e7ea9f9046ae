use std::collections::BTreeSet;

use thiserror::Error;

use super::lexer::{tokenize, Pragma, Tok, Token};
use super::{Atom, ChoiceElement, ChoiceHead, Head, Literal, Origin, Program, Rule, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: syntax error: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("{line}: unsafe variable `{variable}` in rule {rule}")]
    Unsafe { line: usize, rule: String, variable: String },
    #[error("{line}: duplicate rule id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("{line}: malformed mode declaration: {message}")]
    ModeSchema { line: usize, message: String },
    #[error("{line}: example atom `{atom}` is not ground")]
    NonGroundExample { line: usize, atom: String },
    #[error("{line}: {message}")]
    Task { line: usize, message: String },
}

impl ParseError {
    pub fn line(&self) -> usize {
        match self {
            ParseError::Syntax { line, .. }
            | ParseError::Unsafe { line, .. }
            | ParseError::DuplicateId { line, .. }
            | ParseError::ModeSchema { line, .. }
            | ParseError::NonGroundExample { line, .. }
            | ParseError::Task { line, .. } => *line,
        }
    }
}

/// Parses program text; rule ids default to `<input>:line`.
pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    parse_program_named("<input>", src)
}

/// Parses program text, naming default rule ids `name:line`.
pub fn parse_program_named(name: &str, src: &str) -> Result<Program, ParseError> {
    let mut p = Parser::new(tokenize(src)?, name);
    let mut program = Program::default();
    while !p.at(&Tok::Eof) {
        let rules = p.statement()?;
        p.push_rules(&mut program, rules)?;
    }
    if let Some(line) = p.dangling_pragma() {
        return Err(ParseError::Syntax {
            line,
            col: 1,
            message: "annotation is not followed by a statement".into(),
        });
    }
    Ok(program)
}

/// Parses exactly one statement.
pub fn parse_rule(src: &str) -> Result<Rule, ParseError> {
    let program = parse_program(src)?;
    let n = program.rules.len();
    let mut rules = program.rules.into_iter();
    match (rules.next(), n) {
        (Some(r), 1) => Ok(r),
        _ => Err(ParseError::Syntax {
            line: 1,
            col: 1,
            message: format!("expected exactly one statement, found {n}"),
        }),
    }
}

/// Parses a single atom such as `robbery("Giulio","Veronica")`; a trailing
/// `.` is accepted.
pub fn parse_atom(src: &str) -> Result<Atom, ParseError> {
    let mut p = Parser::new(tokenize(src)?, "<atom>");
    let atom = p.atom()?;
    p.eat(&Tok::Dot);
    p.expect(&Tok::Eof)?;
    Ok(atom)
}

#[derive(Default)]
struct Pending {
    trace: Option<String>,
    id: Option<String>,
    specific_over: Vec<String>,
    origin: Option<Origin>,
    line: Option<usize>,
}

pub(crate) enum Arg {
    Term(Term),
    Interval(i64, i64),
}

pub(crate) struct Parser {
    toks: Vec<Token>,
    pos: usize,
    name: String,
    pending: Pending,
    anon: usize,
    used_ids: BTreeSet<String>,
}

impl Parser {
    pub(crate) fn new(toks: Vec<Token>, name: &str) -> Self {
        Parser {
            toks,
            pos: 0,
            name: name.to_string(),
            pending: Pending::default(),
            anon: 0,
            used_ids: BTreeSet::new(),
        }
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub(crate) fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    pub(crate) fn line(&self) -> usize {
        self.toks[self.pos].line
    }

    pub(crate) fn at(&self, t: &Tok) -> bool {
        self.peek() == t
    }

    pub(crate) fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn eat(&mut self, t: &Tok) -> bool {
        if self.at(t) {
            self.next();
            true
        } else {
            false
        }
    }

    pub(crate) fn error(&self, message: impl Into<String>) -> ParseError {
        let t = &self.toks[self.pos];
        ParseError::Syntax { line: t.line, col: t.col, message: message.into() }
    }

    pub(crate) fn expect(&mut self, t: &Tok) -> Result<(), ParseError> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(self.error(format!("expected {}, found {}", t.describe(), self.peek().describe())))
        }
    }

    pub(crate) fn expect_int(&mut self) -> Result<i64, ParseError> {
        match self.peek().clone() {
            Tok::Int(i) => {
                self.next();
                Ok(i)
            }
            other => Err(self.error(format!("expected integer, found {}", other.describe()))),
        }
    }

    pub(crate) fn expect_ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.next();
                Ok(s)
            }
            other => Err(self.error(format!("expected name, found {}", other.describe()))),
        }
    }

    fn dangling_pragma(&self) -> Option<usize> {
        let p = &self.pending;
        (p.trace.is_some() || p.id.is_some() || !p.specific_over.is_empty() || p.origin.is_some())
            .then(|| p.line.unwrap_or(1))
    }

    /// Collects pragma tokens preceding the next statement.
    pub(crate) fn pragmas(&mut self) -> Result<(), ParseError> {
        while let Tok::Pragma(p) = self.peek().clone() {
            let line = self.line();
            self.pending.line.get_or_insert(line);
            match p {
                Pragma::Trace(t) => self.pending.trace = Some(t),
                Pragma::Id(id) => self.pending.id = Some(id),
                Pragma::SpecificOver(id) => self.pending.specific_over.push(id),
                Pragma::Origin(o) => {
                    let origin = Origin::parse(&o)
                        .ok_or_else(|| self.error(format!("unknown origin `{o}`")))?;
                    self.pending.origin = Some(origin);
                }
            }
            self.next();
        }
        Ok(())
    }

    /// One rule statement, possibly expanding interval facts into several.
    pub(crate) fn statement(&mut self) -> Result<Vec<Rule>, ParseError> {
        self.pragmas()?;
        if self.at(&Tok::Eof) {
            return Ok(Vec::new());
        }
        let line = self.line();
        self.anon = 0;
        let (head_atoms, head) = match self.peek().clone() {
            Tok::If => (None, Head::None),
            Tok::Int(_) | Tok::LBrace => (None, Head::Choice(self.choice_head()?)),
            Tok::Ident(_) => {
                let (pred, args) = self.atom_with_intervals()?;
                (Some((pred, args)), Head::None)
            }
            Tok::Directive(d) => return Err(self.error(format!("directive `#{d}` not allowed here"))),
            other => return Err(self.error(format!("unexpected {}", other.describe()))),
        };
        let mut body = Vec::new();
        if self.eat(&Tok::If) {
            body = self.body()?;
        } else if matches!(head, Head::None) && head_atoms.is_none() {
            return Err(self.error("expected `:-`"));
        }
        self.expect(&Tok::Dot)?;

        let heads: Vec<Head> = match head_atoms {
            None => vec![head],
            Some((pred, args)) => {
                let has_interval = args.iter().any(|a| matches!(a, Arg::Interval(..)));
                if has_interval && !body.is_empty() {
                    return Err(ParseError::Syntax {
                        line,
                        col: 1,
                        message: "intervals are only allowed in facts".into(),
                    });
                }
                expand_intervals(&args)
                    .into_iter()
                    .map(|a| Head::Atom(Atom::new(pred.clone(), a)))
                    .collect()
            }
        };

        let pending = std::mem::take(&mut self.pending);
        let mut rules = Vec::with_capacity(heads.len());
        for head in heads {
            let mut r = Rule::new(String::new(), head, body.clone());
            r.annotation = pending.trace.clone();
            r.origin = pending.origin.unwrap_or_default();
            r.specific_over = pending.specific_over.clone();
            if let Some(v) = r.unsafe_variable() {
                return Err(ParseError::Unsafe {
                    line,
                    rule: format!("{}:{line}", self.name),
                    variable: v,
                });
            }
            rules.push(r);
        }
        // ids are assigned when the rules are pushed into a program
        self.assign_ids(&mut rules, pending.id, line)?;
        Ok(rules)
    }

    fn assign_ids(&mut self, rules: &mut [Rule], explicit: Option<String>, line: usize) -> Result<(), ParseError> {
        let base = match &explicit {
            Some(id) => {
                if self.used_ids.contains(id) {
                    return Err(ParseError::DuplicateId { line, id: id.clone() });
                }
                id.clone()
            }
            None => format!("{}:{line}", self.name),
        };
        let mut k = 1;
        for r in rules.iter_mut() {
            let mut id = if k == 1 { base.clone() } else { format!("{base}#{k}") };
            while self.used_ids.contains(&id) {
                k += 1;
                id = format!("{base}#{k}");
            }
            k += 1;
            self.used_ids.insert(id.clone());
            r.id = id;
        }
        Ok(())
    }

    pub(crate) fn push_rules(&mut self, program: &mut Program, rules: Vec<Rule>) -> Result<(), ParseError> {
        program.rules.extend(rules);
        Ok(())
    }

    fn choice_head(&mut self) -> Result<ChoiceHead, ParseError> {
        let lower = match self.peek().clone() {
            Tok::Int(i) => {
                self.next();
                bound(i).map_err(|m| self.error(m))?
            }
            _ => 0,
        };
        self.expect(&Tok::LBrace)?;
        let mut elements = Vec::new();
        if !self.at(&Tok::RBrace) {
            loop {
                let atom = self.atom()?;
                let mut condition = Vec::new();
                if self.eat(&Tok::Colon) {
                    loop {
                        if self.at(&Tok::Not) {
                            return Err(self.error("choice conditions must be positive atoms"));
                        }
                        condition.push(self.atom()?);
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                elements.push(ChoiceElement { atom, condition });
                if !self.eat(&Tok::Semi) {
                    break;
                }
            }
        }
        self.expect(&Tok::RBrace)?;
        let upper = match self.peek().clone() {
            Tok::Int(i) => {
                self.next();
                Some(bound(i).map_err(|m| self.error(m))?)
            }
            _ => None,
        };
        if let Some(u) = upper {
            if u < lower {
                return Err(self.error(format!("choice bounds {lower} > {u}")));
            }
        }
        Ok(ChoiceHead { lower, upper, elements })
    }

    pub(crate) fn body(&mut self) -> Result<Vec<Literal>, ParseError> {
        let mut body = Vec::new();
        loop {
            body.push(self.literal()?);
            if !(self.eat(&Tok::Comma) || self.eat(&Tok::Semi)) {
                break;
            }
        }
        Ok(body)
    }

    fn literal(&mut self) -> Result<Literal, ParseError> {
        if self.eat(&Tok::Not) {
            return Ok(Literal::Neg(self.atom()?));
        }
        let starts_term = match self.peek() {
            Tok::Var(_) | Tok::Int(_) | Tok::Str(_) => true,
            Tok::Ident(_) => matches!(self.peek_at(1), Tok::Cmp(_)),
            _ => false,
        };
        if starts_term {
            let left = self.term()?;
            let op = match self.next() {
                Tok::Cmp(op) => op,
                other => return Err(self.error(format!("expected comparison, found {}", other.describe()))),
            };
            let right = self.term()?;
            return Ok(Literal::Cmp { left, op, right });
        }
        Ok(Literal::Pos(self.atom()?))
    }

    pub(crate) fn term(&mut self) -> Result<Term, ParseError> {
        match self.arg()? {
            Arg::Term(t) => Ok(t),
            Arg::Interval(..) => Err(self.error("intervals are only allowed in facts")),
        }
    }

    fn arg(&mut self) -> Result<Arg, ParseError> {
        let t = match self.peek().clone() {
            Tok::Int(i) => {
                self.next();
                if self.eat(&Tok::DotDot) {
                    let hi = self.expect_int()?;
                    return Ok(Arg::Interval(i, hi));
                }
                Term::Int(i)
            }
            Tok::Ident(s) => {
                self.next();
                if self.at(&Tok::LParen) {
                    return Err(self.error("function symbols are not supported"));
                }
                Term::Symbol(s)
            }
            Tok::Str(s) => {
                self.next();
                Term::Str(s)
            }
            Tok::Var(v) => {
                self.next();
                if v == "_" {
                    self.anon += 1;
                    Term::Var(format!("_Anon{}", self.anon))
                } else {
                    Term::Var(v)
                }
            }
            other => return Err(self.error(format!("expected term, found {}", other.describe()))),
        };
        Ok(Arg::Term(t))
    }

    pub(crate) fn atom(&mut self) -> Result<Atom, ParseError> {
        let (pred, args) = self.atom_with_intervals()?;
        let args = args
            .into_iter()
            .map(|a| match a {
                Arg::Term(t) => Ok(t),
                Arg::Interval(..) => Err(self.error("intervals are only allowed in facts")),
            })
            .collect::<Result<_, _>>()?;
        Ok(Atom::new(pred, args))
    }

    fn atom_with_intervals(&mut self) -> Result<(String, Vec<Arg>), ParseError> {
        let pred = self.expect_ident()?;
        let mut args = Vec::new();
        if self.eat(&Tok::LParen) {
            loop {
                args.push(self.arg()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(&Tok::RParen)?;
        }
        Ok((pred, args))
    }
}

fn bound(i: i64) -> Result<u32, String> {
    u32::try_from(i).map_err(|_| format!("choice bound {i} out of range"))
}

fn expand_intervals(args: &[Arg]) -> Vec<Vec<Term>> {
    let mut out: Vec<Vec<Term>> = vec![Vec::new()];
    for a in args {
        let options: Vec<Term> = match a {
            Arg::Term(t) => vec![t.clone()],
            Arg::Interval(lo, hi) => (*lo..=*hi).map(Term::Int).collect(),
        };
        out = out
            .into_iter()
            .flat_map(|prefix| {
                options.iter().map(move |o| {
                    let mut v = prefix.clone();
                    v.push(o.clone());
                    v
                })
            })
            .collect();
    }
    out
}
