//! Tokenizer and recursive-descent parser for the Datalog text format.
//!
//! Clauses are rules `h :- b1, ..., bn.`, facts `p(c1, ..., cn).` and at most
//! one query directive `?- g1, ..., gk.`. `%` starts a line comment.

use std::fmt;

use super::term::{unescape_quoted, Atom, Const, Term};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("duplicate query directive at {line}:{column}")]
    DuplicateQuery { line: usize, column: usize },
    #[error("query conflicts with existing rules for {0}")]
    AnswerConflict(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Name(String),
    Var(String),
    Int(i64),
    Quoted(String),
    LParen,
    RParen,
    Comma,
    Dot,
    If,
    Query,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Name(s) | Tok::Var(s) => write!(f, "`{s}`"),
            Tok::Int(v) => write!(f, "`{v}`"),
            Tok::Quoted(s) => write!(f, "'{s}'"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::If => f.write_str("`:-`"),
            Tok::Query => f.write_str("`?-`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src,
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek_char()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn span(&self) -> Span {
        Span {
            line: self.line,
            column: self.col,
        }
    }

    fn error(&self, span: Span, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            line: span.line,
            column: span.column,
            message: message.into(),
        }
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek_char() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '%' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn next_token(&mut self) -> Result<(Tok, Span), ParseError> {
        self.skip_trivia();
        let span = self.span();
        let Some(c) = self.peek_char() else {
            return Ok((Tok::Eof, span));
        };
        let tok = match c {
            '(' => {
                self.bump();
                Tok::LParen
            }
            ')' => {
                self.bump();
                Tok::RParen
            }
            ',' => {
                self.bump();
                Tok::Comma
            }
            '.' => {
                self.bump();
                Tok::Dot
            }
            ':' => {
                self.bump();
                if self.bump() != Some('-') {
                    return Err(self.error(span, "expected `:-`"));
                }
                Tok::If
            }
            '?' => {
                self.bump();
                if self.bump() != Some('-') {
                    return Err(self.error(span, "expected `?-`"));
                }
                Tok::Query
            }
            '\'' | '"' => self.quoted(c, span)?,
            c if c.is_ascii_digit() || c == '-' => {
                let start = self.pos;
                self.bump();
                while matches!(self.peek_char(), Some(d) if d.is_ascii_digit()) {
                    self.bump();
                }
                let text = &self.src[start..self.pos];
                if text == "-" {
                    return Err(self.error(span, "expected digits after `-`"));
                }
                if matches!(self.peek_char(), Some(d) if d.is_alphanumeric() || d == '_') {
                    return Err(self.error(span, format!("malformed number `{text}`")));
                }
                Tok::Int(
                    text.parse()
                        .map_err(|_| self.error(span, format!("integer out of range `{text}`")))?,
                )
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = self.pos;
                while matches!(self.peek_char(), Some(d) if d.is_alphanumeric() || d == '_') {
                    self.bump();
                }
                let text = self.src[start..self.pos].to_string();
                if c.is_uppercase() || c == '_' {
                    Tok::Var(text)
                } else {
                    Tok::Name(text)
                }
            }
            other => return Err(self.error(span, format!("unexpected character `{other}`"))),
        };
        Ok((tok, span))
    }

    fn quoted(&mut self, quote: char, span: Span) -> Result<Tok, ParseError> {
        self.bump();
        let start = self.pos;
        loop {
            match self.bump() {
                None => return Err(self.error(span, "unterminated quoted atom")),
                Some('\\') => {
                    if self.bump().is_none() {
                        return Err(self.error(span, "unterminated quoted atom"));
                    }
                }
                Some(c) if c == quote => {
                    if self.peek_char() == Some(quote) {
                        self.bump();
                    } else {
                        break;
                    }
                }
                Some(_) => {}
            }
        }
        let raw = &self.src[start..self.pos - 1];
        let text = if quote == '\'' {
            unescape_quoted(raw)
        } else {
            unescape_quoted(&raw.replace("\"\"", "\"").replace('\'', "''"))
        };
        text.map(Tok::Quoted)
            .ok_or_else(|| self.error(span, "malformed escape in quoted atom"))
    }
}

/// One top-level clause in source order.
#[derive(Debug, Clone)]
pub enum Clause {
    Rule { head: Atom, body: Vec<Atom> },
    Query(Vec<Atom>),
}

pub(crate) struct Parser<'a> {
    lex: Lexer<'a>,
    tok: Tok,
    span: Span,
    anon: usize,
}

impl<'a> Parser<'a> {
    pub(crate) fn new(src: &'a str) -> Result<Self, ParseError> {
        let mut lex = Lexer::new(src);
        let (tok, span) = lex.next_token()?;
        Ok(Parser {
            lex,
            tok,
            span,
            anon: 0,
        })
    }

    fn advance(&mut self) -> Result<Tok, ParseError> {
        let (tok, span) = self.lex.next_token()?;
        self.span = span;
        Ok(std::mem::replace(&mut self.tok, tok))
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        self.lex
            .error(self.span, format!("expected {expected}, found {}", self.tok))
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.tok == tok {
            self.advance()?;
            Ok(())
        } else {
            Err(self.unexpected(what))
        }
    }

    pub(crate) fn at_eof(&self) -> bool {
        self.tok == Tok::Eof
    }

    pub(crate) fn span(&self) -> Span {
        self.span
    }

    pub(crate) fn clause(&mut self) -> Result<Clause, ParseError> {
        if self.tok == Tok::Query {
            self.advance()?;
            let goal = self.conjunction()?;
            self.expect(Tok::Dot, "`.` after query")?;
            return Ok(Clause::Query(goal));
        }
        let head = self.atom()?;
        let body = if self.tok == Tok::If {
            self.advance()?;
            self.conjunction()?
        } else {
            Vec::new()
        };
        self.expect(Tok::Dot, "`.` or `:-`")?;
        Ok(Clause::Rule { head, body })
    }

    fn conjunction(&mut self) -> Result<Vec<Atom>, ParseError> {
        let mut atoms = vec![self.atom()?];
        while self.tok == Tok::Comma {
            self.advance()?;
            atoms.push(self.atom()?);
        }
        Ok(atoms)
    }

    fn atom(&mut self) -> Result<Atom, ParseError> {
        let name = match &self.tok {
            Tok::Name(n) | Tok::Quoted(n) => n.clone(),
            _ => return Err(self.unexpected("predicate name")),
        };
        self.advance()?;
        let mut args = Vec::new();
        if self.tok == Tok::LParen {
            self.advance()?;
            if self.tok != Tok::RParen {
                args.push(self.term()?);
                while self.tok == Tok::Comma {
                    self.advance()?;
                    args.push(self.term()?);
                }
            }
            self.expect(Tok::RParen, "`,` or `)`")?;
        }
        Ok(Atom::new(name, args))
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let t = match &self.tok {
            Tok::Var(v) if v == "_" => {
                let name = format!("_{}", self.anon);
                self.anon += 1;
                Term::Var(name)
            }
            Tok::Var(v) => Term::Var(v.clone()),
            Tok::Int(i) => Term::Const(Const::Int(*i)),
            Tok::Name(n) | Tok::Quoted(n) => Term::Const(Const::Sym(n.clone())),
            Tok::LParen => return Err(self.lex.error(self.span, "compound terms are not supported")),
            _ => return Err(self.unexpected("term")),
        };
        self.advance()?;
        if self.tok == Tok::LParen {
            return Err(self.lex.error(self.span, "function symbols are not supported"));
        }
        Ok(t)
    }
}

/// Variables produced for `_`; they are never reported as answer columns.
pub fn is_anonymous_var(name: &str) -> bool {
    name.strip_prefix('_')
        .is_some_and(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
}

/// Parses a single ground fact such as `att(d1, title, 'X').`
pub fn parse_fact(text: &str) -> Result<Atom, ParseError> {
    let mut p = Parser::new(text)?;
    let span = p.span();
    match p.clause()? {
        Clause::Rule { head, body } if body.is_empty() && head.is_ground() => {
            if !p.at_eof() {
                return Err(p.unexpected("end of fact"));
            }
            Ok(head)
        }
        _ => Err(ParseError::Syntax {
            line: span.line,
            column: span.column,
            message: "expected a ground fact".into(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clauses(src: &str) -> Result<Vec<Clause>, ParseError> {
        let mut p = Parser::new(src)?;
        let mut out = Vec::new();
        while !p.at_eof() {
            out.push(p.clause()?);
        }
        Ok(out)
    }

    #[test]
    fn unclosed_paren_reports_position() {
        let err = clauses("a(x) :- b(x").unwrap_err();
        match err {
            ParseError::Syntax { line, column, .. } => {
                assert_eq!(line, 1);
                assert_eq!(column, 12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn quoted_atoms_and_escapes() {
        let f = parse_fact("att('node1', title, 'It''s \\'ok\\'').").unwrap();
        assert_eq!(f.args[0], Term::sym("node1"));
        assert_eq!(f.args[2], Term::sym("It's 'ok'"));
    }

    #[test]
    fn anonymous_variables_are_fresh() {
        let cs = clauses("?- p(_, _).").unwrap();
        let Clause::Query(goal) = &cs[0] else { panic!() };
        assert_ne!(goal[0].args[0], goal[0].args[1]);
        assert!(is_anonymous_var(goal[0].args[0].as_var().unwrap()));
        assert!(!is_anonymous_var("_X"));
    }

    #[test]
    fn comments_and_zero_arity() {
        let cs = clauses("% header\nstart. p :- start. % trailing\n").unwrap();
        assert_eq!(cs.len(), 2);
    }

    #[test]
    fn rejects_function_symbols() {
        assert!(clauses("p(f(X)) :- q(X).").is_err());
    }

    #[test]
    fn negative_and_large_integers() {
        let f = parse_fact("v(-5, 12).").unwrap();
        assert_eq!(f.args, vec![Term::int(-5), Term::int(12)]);
        assert!(parse_fact("v(99999999999999999999).").is_err());
    }
}
