//! Text form of the extracted fragments: `h :- a, not b.` for ASP and
//! `0.5::x ; 0.5::y :- b, \+ c.` for ProbLog. `%` starts a line comment.

use std::fmt::Write as _;

use super::ast::{AnnotatedDisjunction, AspProgram, Atom, Literal, NormalRule, ProblogProgram};
use super::LogicError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Atom(String),
    Number(f64),
    Not,
    Backslash,
    If,
    Annot,
    Comma,
    Semi,
    Dot,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

struct Lexer<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
    _src: &'a str,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self { chars: src.chars().collect(), pos: 0, line: 1, col: 1, _src: src }
    }

    fn peek(&self, k: usize) -> Option<char> {
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

    fn err(&self, line: usize, col: usize, msg: impl Into<String>) -> LogicError {
        LogicError::Syntax { line, col, message: msg.into() }
    }

    fn tokens(mut self) -> Result<Vec<Spanned>, LogicError> {
        let mut out = Vec::new();
        while let Some(c) = self.peek(0) {
            let (line, col) = (self.line, self.col);
            if c.is_whitespace() {
                self.bump();
                continue;
            }
            if c == '%' {
                while let Some(c) = self.peek(0) {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
                continue;
            }
            let tok = match c {
                ',' => {
                    self.bump();
                    Tok::Comma
                }
                ';' => {
                    self.bump();
                    Tok::Semi
                }
                '.' => {
                    self.bump();
                    Tok::Dot
                }
                '\\' => {
                    self.bump();
                    if self.peek(0) != Some('+') {
                        return Err(self.err(line, col, "expected '\\+'"));
                    }
                    self.bump();
                    Tok::Backslash
                }
                ':' => {
                    self.bump();
                    match self.bump() {
                        Some('-') => Tok::If,
                        Some(':') => Tok::Annot,
                        _ => return Err(self.err(line, col, "expected ':-' or '::'")),
                    }
                }
                c if c.is_ascii_digit() => Tok::Number(self.number(line, col)?),
                c if c.is_ascii_lowercase() => {
                    let name = self.atom(line, col)?;
                    if name == "not" {
                        Tok::Not
                    } else {
                        Tok::Atom(name)
                    }
                }
                other => return Err(self.err(line, col, format!("unexpected character {other:?}"))),
            };
            out.push(Spanned { tok, line, col });
        }
        Ok(out)
    }

    fn number(&mut self, line: usize, col: usize) -> Result<f64, LogicError> {
        let mut s = String::new();
        while let Some(c) = self.peek(0) {
            let next_is_digit = self.peek(1).is_some_and(|d| d.is_ascii_digit());
            let ok = c.is_ascii_digit()
                || (c == '.' && next_is_digit)
                || c == 'e'
                || c == 'E'
                || ((c == '-' || c == '+') && s.ends_with(['e', 'E']));
            if !ok {
                break;
            }
            s.push(c);
            self.bump();
        }
        s.parse().map_err(|_| self.err(line, col, format!("bad number {s:?}")))
    }

    fn ident(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek(0) {
            if c.is_ascii_alphanumeric() || c == '_' {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        s
    }

    fn atom(&mut self, line: usize, col: usize) -> Result<String, LogicError> {
        let mut name = self.ident();
        if self.peek(0) == Some('(') {
            self.bump();
            let mut args = Vec::new();
            loop {
                while self.peek(0).is_some_and(|c| c == ' ') {
                    self.bump();
                }
                let a = self.ident();
                if a.is_empty() {
                    return Err(self.err(self.line, self.col, "expected argument"));
                }
                args.push(a);
                while self.peek(0).is_some_and(|c| c == ' ') {
                    self.bump();
                }
                match self.bump() {
                    Some(',') => continue,
                    Some(')') => break,
                    _ => return Err(self.err(line, col, "unterminated argument list")),
                }
            }
            let _ = write!(name, "({})", args.join(","));
        }
        Ok(name)
    }
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    end: (usize, usize),
}

impl Parser {
    fn new(src: &str) -> Result<Self, LogicError> {
        let toks = Lexer::new(src).tokens()?;
        let lines: Vec<&str> = src.lines().collect();
        let end = (lines.len().max(1), lines.last().map_or(1, |l| l.chars().count() + 1));
        Ok(Self { toks, pos: 0, end })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks.get(self.pos).map_or(self.end, |s| (s.line, s.col))
    }

    fn err(&self, msg: impl Into<String>) -> LogicError {
        let (line, col) = self.here();
        LogicError::Syntax { line, col, message: msg.into() }
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|s| s.tok.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), LogicError> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn atom(&mut self) -> Result<Atom, LogicError> {
        match self.peek() {
            Some(Tok::Atom(a)) => {
                let a = Atom(a.clone());
                self.pos += 1;
                Ok(a)
            }
            _ => Err(self.err("expected atom")),
        }
    }

    fn body(&mut self, neg: &Tok) -> Result<Vec<Literal>, LogicError> {
        let mut lits = Vec::new();
        loop {
            let negated = if self.peek() == Some(neg) {
                self.pos += 1;
                true
            } else {
                false
            };
            if !matches!(self.peek(), Some(Tok::Atom(_))) {
                return Err(self.err("expected literal"));
            }
            lits.push(Literal { atom: self.atom()?, negated });
            match self.peek() {
                Some(Tok::Comma) => self.pos += 1,
                _ => break,
            }
        }
        Ok(lits)
    }

    fn rule_tail(&mut self, head: Atom, neg: &Tok) -> Result<NormalRule, LogicError> {
        let body = if self.peek() == Some(&Tok::If) {
            self.pos += 1;
            self.body(neg)?
        } else {
            Vec::new()
        };
        self.expect(Tok::Dot, "'.'")?;
        Ok(NormalRule { head, body })
    }

    fn done(&self) -> bool {
        self.pos >= self.toks.len()
    }
}

pub fn parse_asp(src: &str) -> Result<AspProgram, LogicError> {
    let mut p = Parser::new(src)?;
    let mut rules = Vec::new();
    while !p.done() {
        let head = p.atom()?;
        rules.push(p.rule_tail(head, &Tok::Not)?);
    }
    Ok(AspProgram { rules })
}

pub fn parse_problog(src: &str) -> Result<ProblogProgram, LogicError> {
    let mut p = Parser::new(src)?;
    let mut prog = ProblogProgram::default();
    while !p.done() {
        if let Some(Tok::Number(_)) = p.peek() {
            let mut choices = Vec::new();
            loop {
                let Some(Tok::Number(prob)) = p.next() else {
                    p.pos -= 1;
                    return Err(p.err("expected probability"));
                };
                p.expect(Tok::Annot, "'::'")?;
                choices.push((prob, p.atom()?));
                if p.peek() == Some(&Tok::Semi) {
                    p.pos += 1;
                } else {
                    break;
                }
            }
            let body = if p.peek() == Some(&Tok::If) {
                p.pos += 1;
                p.body(&Tok::Backslash)?
            } else {
                Vec::new()
            };
            p.expect(Tok::Dot, "'.'")?;
            prog.disjunctions.push(AnnotatedDisjunction { choices, body });
        } else {
            let head = p.atom()?;
            prog.rules.push(p.rule_tail(head, &Tok::Backslash)?);
        }
    }
    Ok(prog)
}

fn write_body(out: &mut String, body: &[Literal], neg: &str) {
    for (i, l) in body.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        if l.negated {
            out.push_str(neg);
        }
        out.push_str(l.atom.name());
    }
}

fn write_rule(out: &mut String, r: &NormalRule, neg: &str) {
    out.push_str(r.head.name());
    if !r.body.is_empty() {
        out.push_str(" :- ");
        write_body(out, &r.body, neg);
    }
    out.push_str(".\n");
}

pub fn print_asp(p: &AspProgram) -> String {
    let mut out = String::new();
    for r in &p.rules {
        write_rule(&mut out, r, "not ");
    }
    out
}

/// Canonical ProbLog text. Probabilities use the shortest decimal that reads
/// back to the same value, or exactly `decimals` places when given.
pub fn print_problog_with(p: &ProblogProgram, decimals: Option<usize>) -> String {
    let mut out = String::new();
    for ad in &p.disjunctions {
        for (i, (prob, atom)) in ad.choices.iter().enumerate() {
            if i > 0 {
                out.push_str(" ; ");
            }
            match decimals {
                Some(d) => {
                    let _ = write!(out, "{prob:.d$}::{atom}");
                }
                None => {
                    let _ = write!(out, "{prob:?}::{atom}");
                }
            }
        }
        if !ad.body.is_empty() {
            out.push_str(" :- ");
            write_body(&mut out, &ad.body, "\\+ ");
        }
        out.push_str(".\n");
    }
    for r in &p.rules {
        write_rule(&mut out, r, "\\+ ");
    }
    out
}

pub fn print_problog(p: &ProblogProgram) -> String {
    print_problog_with(p, None)
}
