//! Recursive-descent parser for the expression grammar.
//!
//! Precedence, tightest first: `^` (right-associative), unary `-`, `* /`,
//! `+ -` (left-associative). Functions: `sqrt sin cos asin`. Atoms:
//! `D0[q]`..`D3[q]`, `p[q]`, `pi[q]`, `p0`, `t`, `E[i]`, `Ep[i]`, `eta[i]`,
//! `lambda[i]`, `A`, `hbar`, where `q` is a declared coordinate name and `i`
//! is a 1-based coordinate index or name.

use thiserror::Error;

use super::atom::{AtomId, CoordNames};
use super::expr::{Expr, Q};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown atom `{0}`")]
    UnknownAtom(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("non-rational numeric value: {0}")]
    NonRational(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{line}:{column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Q, String),
    Ident(String),
    Op(char),
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

pub fn parse(source: &str, names: &CoordNames) -> Result<Expr, ParseError> {
    let tokens = lex(source)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        names,
        end: end_position(source),
    };
    let e = p.expr()?;
    if let Some(t) = p.peek() {
        return Err(p.error_at(t, ParseErrorKind::Syntax(format!("unexpected {}", describe(&t.tok)))));
    }
    Ok(e)
}

fn end_position(source: &str) -> (usize, usize) {
    let mut line = 1;
    let mut column = 1;
    for ch in source.chars() {
        if ch == '\n' {
            line += 1;
            column = 1;
        } else {
            column += 1;
        }
    }
    (line, column)
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(_, s) => format!("number `{s}`"),
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Op(c) => format!("`{c}`"),
    }
}

fn lex(source: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = source.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut column) = (1usize, 1usize);
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        let start = (line, column);
        if ch == '\n' {
            line += 1;
            column = 1;
            i += 1;
            continue;
        }
        if ch.is_whitespace() {
            column += 1;
            i += 1;
            continue;
        }
        if ch.is_ascii_digit() || ch == '.' {
            let begin = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            let text: String = chars[begin..i].iter().collect();
            column += i - begin;
            let value = decimal(&text).ok_or(ParseError {
                line: start.0,
                column: start.1,
                kind: ParseErrorKind::NonRational(text.clone()),
            })?;
            out.push(Spanned {
                tok: Tok::Num(value, text),
                line: start.0,
                column: start.1,
            });
            continue;
        }
        if ch.is_alphabetic() || ch == '_' {
            let begin = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                i += 1;
            }
            column += i - begin;
            out.push(Spanned {
                tok: Tok::Ident(chars[begin..i].iter().collect()),
                line: start.0,
                column: start.1,
            });
            continue;
        }
        if "+-*/^()[],".contains(ch) {
            out.push(Spanned {
                tok: Tok::Op(ch),
                line: start.0,
                column: start.1,
            });
            column += 1;
            i += 1;
            continue;
        }
        return Err(ParseError {
            line: start.0,
            column: start.1,
            kind: ParseErrorKind::Syntax(format!("unexpected character `{ch}`")),
        });
    }
    Ok(out)
}

/// Exact value of a decimal literal such as `12`, `0.25` or `3.`.
fn decimal(text: &str) -> Option<Q> {
    let (int_part, frac_part) = match text.split_once('.') {
        Some((a, b)) => (a, b),
        None => (text, ""),
    };
    if frac_part.contains('.') || (int_part.is_empty() && frac_part.is_empty()) {
        return None;
    }
    if frac_part.len() > 30 || int_part.len() > 30 {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let n: i128 = if digits.is_empty() { 0 } else { digits.parse().ok()? };
    let d = 10i128.checked_pow(frac_part.len() as u32)?;
    Some(Q::new(n, d))
}

struct Parser<'a> {
    tokens: Vec<Spanned>,
    pos: usize,
    names: &'a CoordNames,
    end: (usize, usize),
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Spanned> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Spanned> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn error_at(&self, t: &Spanned, kind: ParseErrorKind) -> ParseError {
        ParseError {
            line: t.line,
            column: t.column,
            kind,
        }
    }

    fn error_here(&self, kind: ParseErrorKind) -> ParseError {
        match self.peek() {
            Some(t) => self.error_at(t, kind),
            None => ParseError {
                line: self.end.0,
                column: self.end.1,
                kind,
            },
        }
    }

    fn eat_op(&mut self, c: char) -> bool {
        if matches!(self.peek(), Some(Spanned { tok: Tok::Op(x), .. }) if *x == c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat_op(c) {
            return Ok(());
        }
        let found = self
            .peek()
            .map(|t| describe(&t.tok))
            .unwrap_or_else(|| "end of input".to_string());
        Err(self.error_here(ParseErrorKind::Syntax(format!("expected `{c}`, found {found}"))))
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = vec![self.term()?];
        loop {
            if self.eat_op('+') {
                acc.push(self.term()?);
            } else if self.eat_op('-') {
                acc.push(-self.term()?);
            } else {
                return Ok(Expr::add(acc));
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat_op('*') {
                acc = acc * self.unary()?;
            } else if self.eat_op('/') {
                let at = self.peek().cloned();
                let rhs = self.unary()?;
                if rhs.is_zero() {
                    let kind = ParseErrorKind::Syntax("division by zero".into());
                    return Err(match at {
                        Some(t) => self.error_at(&t, kind),
                        None => self.error_here(kind),
                    });
                }
                acc = acc / rhs;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat_op('-') {
            return Ok(-self.unary()?);
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if !self.eat_op('^') {
            return Ok(base);
        }
        let at = self.peek().cloned();
        let exponent = self.unary()?;
        match exponent.as_num() {
            Some(e) => Ok(Expr::pow(base, e)),
            None => {
                let kind = ParseErrorKind::NonRational(format!("exponent `{exponent}`"));
                Err(match at {
                    Some(t) => self.error_at(&t, kind),
                    None => self.error_here(kind),
                })
            }
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let Some(t) = self.next() else {
            return Err(self.error_here(ParseErrorKind::Syntax("unexpected end of input".into())));
        };
        match &t.tok {
            Tok::Num(v, _) => Ok(Expr::num(*v)),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect_op(')')?;
                Ok(e)
            }
            Tok::Op(c) => Err(self.error_at(&t, ParseErrorKind::Syntax(format!("unexpected `{c}`")))),
            Tok::Ident(name) => {
                if self.eat_op('(') {
                    let arg = self.expr()?;
                    self.expect_op(')')?;
                    return match name.as_str() {
                        "sqrt" => Ok(Expr::sqrt(arg)),
                        "sin" => Ok(Expr::sin(arg)),
                        "cos" => Ok(Expr::cos(arg)),
                        "asin" => Ok(Expr::asin(arg)),
                        _ => Err(self.error_at(&t, ParseErrorKind::UnknownFunction(name.clone()))),
                    };
                }
                let index = if self.eat_op('[') {
                    let Some(it) = self.next() else {
                        return Err(self.error_here(ParseErrorKind::Syntax("expected index".into())));
                    };
                    let text = match &it.tok {
                        Tok::Ident(s) => s.clone(),
                        Tok::Num(_, s) => s.clone(),
                        Tok::Op(c) => {
                            return Err(self.error_at(&it, ParseErrorKind::Syntax(format!("unexpected `{c}` in index"))))
                        }
                    };
                    self.expect_op(']')?;
                    Some(text)
                } else {
                    None
                };
                self.atom(&t, name, index.as_deref()).map(Expr::atom)
            }
        }
    }

    fn atom(&self, at: &Spanned, name: &str, index: Option<&str>) -> Result<AtomId, ParseError> {
        let unknown = || {
            let shown = match index {
                Some(i) => format!("{name}[{i}]"),
                None => name.to_string(),
            };
            self.error_at(at, ParseErrorKind::UnknownAtom(shown))
        };
        let coord = |i: &str| self.names.lookup(i);
        // constants accept either a numeric index or a coordinate name
        let constant_index = |i: &str| -> Option<u32> {
            match i.parse::<u32>() {
                Ok(n) if n >= 1 && (n as usize) <= self.names.len() => Some(n),
                Ok(_) => None,
                Err(_) => coord(i),
            }
        };
        let atom = match (name, index) {
            ("t", None) => Some(AtomId::time()),
            ("p0", None) => Some(AtomId::p0()),
            ("A", None) => Some(AtomId::additive()),
            ("hbar", None) => Some(AtomId::hbar()),
            ("D0", Some(i)) => coord(i).map(|k| AtomId::chain(k, 0)),
            ("D1", Some(i)) => coord(i).map(|k| AtomId::chain(k, 1)),
            ("D2", Some(i)) => coord(i).map(|k| AtomId::chain(k, 2)),
            ("D3", Some(i)) => coord(i).map(|k| AtomId::chain(k, 3)),
            ("p", Some(i)) => coord(i).map(AtomId::p),
            ("pi", Some(i)) => coord(i).map(AtomId::pi),
            ("E", Some(i)) => constant_index(i).map(AtomId::separation),
            ("Ep", Some(i)) => constant_index(i).map(AtomId::energy),
            ("eta", Some(i)) => constant_index(i).map(AtomId::eta),
            ("lambda", Some(i)) => constant_index(i).map(AtomId::lambda),
            _ => None,
        };
        atom.ok_or_else(unknown)
    }
}
