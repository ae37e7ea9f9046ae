use super::parser::ParseError;
use super::CmpOp;

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Var(String),
    Int(i64),
    Str(String),
    Directive(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Dot,
    DotDot,
    If,
    Colon,
    Tilde,
    Cmp(CmpOp),
    Not,
    Pragma(Pragma),
    Eof,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Pragma {
    Trace(String),
    Id(String),
    SpecificOver(String),
    Origin(String),
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Var(s) => format!("variable `{s}`"),
            Tok::Int(i) => format!("integer `{i}`"),
            Tok::Str(s) => format!("string \"{s}\""),
            Tok::Directive(d) => format!("`#{d}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Dot => "`.`".into(),
            Tok::DotDot => "`..`".into(),
            Tok::If => "`:-`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Tilde => "`~`".into(),
            Tok::Cmp(op) => format!("`{}`", op.symbol()),
            Tok::Not => "`not`".into(),
            Tok::Pragma(_) => "annotation".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    Lexer { chars: src.chars().collect(), pos: 0, line: 1, col: 1 }.run()
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
}

impl Lexer {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, k: usize) -> Option<char> {
        self.chars.get(self.pos + k).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn err(&self, line: usize, col: usize, msg: impl Into<String>) -> ParseError {
        ParseError::Syntax { line, col, message: msg.into() }
    }

    fn rest_of_line(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c == '\n' {
                break;
            }
            s.push(c);
            self.bump();
        }
        s
    }

    fn run(mut self) -> Result<Vec<Token>, ParseError> {
        let mut out = Vec::new();
        loop {
            while self.peek().is_some_and(char::is_whitespace) {
                self.bump();
            }
            let (line, col) = (self.line, self.col);
            let Some(c) = self.peek() else {
                out.push(Token { tok: Tok::Eof, line, col });
                return Ok(out);
            };
            let tok = match c {
                '%' => match self.comment(line, col)? {
                    Some(p) => Tok::Pragma(p),
                    None => continue,
                },
                '(' => self.single(Tok::LParen),
                ')' => self.single(Tok::RParen),
                '{' => self.single(Tok::LBrace),
                '}' => self.single(Tok::RBrace),
                ',' => self.single(Tok::Comma),
                ';' => self.single(Tok::Semi),
                '~' => self.single(Tok::Tilde),
                '.' => {
                    self.bump();
                    if self.peek() == Some('.') {
                        self.bump();
                        Tok::DotDot
                    } else {
                        Tok::Dot
                    }
                }
                ':' => {
                    self.bump();
                    if self.peek() == Some('-') {
                        self.bump();
                        Tok::If
                    } else {
                        Tok::Colon
                    }
                }
                '=' => {
                    self.bump();
                    if self.peek() == Some('=') {
                        self.bump();
                    }
                    Tok::Cmp(CmpOp::Eq)
                }
                '!' => {
                    self.bump();
                    if self.peek() != Some('=') {
                        return Err(self.err(line, col, "expected `!=`"));
                    }
                    self.bump();
                    Tok::Cmp(CmpOp::Ne)
                }
                '<' | '>' => {
                    self.bump();
                    let eq = self.peek() == Some('=');
                    if eq {
                        self.bump();
                    }
                    Tok::Cmp(match (c, eq) {
                        ('<', false) => CmpOp::Lt,
                        ('<', true) => CmpOp::Le,
                        (_, false) => CmpOp::Gt,
                        (_, true) => CmpOp::Ge,
                    })
                }
                '"' => Tok::Str(self.string(line, col)?),
                '#' => {
                    self.bump();
                    let name = self.word();
                    if name.is_empty() {
                        return Err(self.err(line, col, "expected directive name after `#`"));
                    }
                    Tok::Directive(name)
                }
                '-' if self.peek_at(1).is_some_and(|d| d.is_ascii_digit()) => {
                    self.bump();
                    Tok::Int(-self.integer(line, col)?)
                }
                d if d.is_ascii_digit() => Tok::Int(self.integer(line, col)?),
                a if a.is_ascii_lowercase() => {
                    let w = self.word();
                    if w == "not" {
                        Tok::Not
                    } else {
                        Tok::Ident(w)
                    }
                }
                a if a.is_ascii_uppercase() || a == '_' => Tok::Var(self.word()),
                other => return Err(self.err(line, col, format!("unexpected character `{other}`"))),
            };
            out.push(Token { tok, line, col });
        }
    }

    fn single(&mut self, t: Tok) -> Tok {
        self.bump();
        t
    }

    fn word(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        s
    }

    fn integer(&mut self, line: usize, col: usize) -> Result<i64, ParseError> {
        let mut s = String::new();
        while let Some(c) = self.peek().filter(char::is_ascii_digit) {
            s.push(c);
            self.bump();
        }
        s.parse().map_err(|_| self.err(line, col, format!("integer `{s}` out of range")))
    }

    fn string(&mut self, line: usize, col: usize) -> Result<String, ParseError> {
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                None | Some('\n') => return Err(self.err(line, col, "unterminated string")),
                Some('"') => return Ok(s),
                Some('\\') => match self.bump() {
                    Some('n') => s.push('\n'),
                    Some(c @ ('"' | '\\')) => s.push(c),
                    _ => return Err(self.err(line, col, "bad escape in string")),
                },
                Some(c) => s.push(c),
            }
        }
    }

    /// Skips a comment, returning a pragma when the comment is one.
    fn comment(&mut self, line: usize, col: usize) -> Result<Option<Pragma>, ParseError> {
        self.bump();
        match self.peek() {
            Some('*') => {
                self.bump();
                loop {
                    match self.bump() {
                        None => return Err(self.err(line, col, "unterminated block comment")),
                        Some('*') if self.peek() == Some('%') => {
                            self.bump();
                            return Ok(None);
                        }
                        _ => {}
                    }
                }
            }
            Some('!') => {
                self.bump();
                let kw = self.word();
                if kw != "trace" {
                    self.rest_of_line();
                    return Ok(None);
                }
                while self.peek().is_some_and(|c| c == ' ' || c == '\t') {
                    self.bump();
                }
                if self.peek() != Some('"') {
                    return Err(self.err(line, col, "`%!trace` expects a quoted template"));
                }
                let (l, c) = (self.line, self.col);
                let text = self.string(l, c)?;
                self.rest_of_line();
                Ok(Some(Pragma::Trace(text)))
            }
            Some('#') => {
                self.bump();
                let mut kw = self.word();
                while self.peek() == Some('-') {
                    self.bump();
                    kw.push('-');
                    kw.push_str(&self.word());
                }
                let arg = self.rest_of_line().trim().to_string();
                let need_arg = |p: fn(String) -> Pragma| {
                    if arg.is_empty() || arg.contains(char::is_whitespace) {
                        Err(self.err(line, col, format!("`%#{kw}` expects one argument")))
                    } else {
                        Ok(Some(p(arg.clone())))
                    }
                };
                match kw.as_str() {
                    "id" => need_arg(Pragma::Id),
                    "specific-over" => need_arg(Pragma::SpecificOver),
                    "origin" => need_arg(Pragma::Origin),
                    _ => Ok(None),
                }
            }
            _ => {
                self.rest_of_line();
                Ok(None)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn punctuation_and_operators() {
        assert_eq!(
            toks(":- a..b != <= >= ~"),
            vec![
                Tok::If,
                Tok::Ident("a".into()),
                Tok::DotDot,
                Tok::Ident("b".into()),
                Tok::Cmp(CmpOp::Ne),
                Tok::Cmp(CmpOp::Le),
                Tok::Cmp(CmpOp::Ge),
                Tok::Tilde,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn comments_and_pragmas() {
        let t = toks("% plain\n%!trace \"{X} is here\"\n%#id snatch\n%* block *% p.");
        assert_eq!(
            t,
            vec![
                Tok::Pragma(Pragma::Trace("{X} is here".into())),
                Tok::Pragma(Pragma::Id("snatch".into())),
                Tok::Ident("p".into()),
                Tok::Dot,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn negative_integer_and_interval() {
        assert_eq!(
            toks("-3..4"),
            vec![Tok::Int(-3), Tok::DotDot, Tok::Int(4), Tok::Eof]
        );
    }

    #[test]
    fn positions_are_tracked() {
        let t = tokenize("p.\n  q(X).").unwrap();
        assert_eq!((t[2].line, t[2].col), (2, 3));
    }

    #[test]
    fn unterminated_string_is_error() {
        assert!(tokenize("p(\"abc).").is_err());
    }
}
