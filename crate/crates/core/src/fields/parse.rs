//! Recursive-descent parser for the field expression language.
//!
//! Grammar (one expression per component, separated by `;`):
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?
//! atom    := number | ident | ident '(' sum ')' | '(' sum ')'
//! ```
//!
//! `^` is right associative and binds tighter than unary minus, so `-x1^2`
//! is `-(x1^2)`.

use std::collections::BTreeMap;

use super::expr::{BinOp, Constant, Expr, Func, Var};
use super::FieldError;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    base: usize,
}

impl<'a> Lexer<'a> {
    fn next(&mut self) -> Result<(Tok, usize), FieldError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let offset = self.base + start;
        if start >= bytes.len() {
            return Ok((Tok::End, offset));
        }
        let c = bytes[start];
        if c.is_ascii_digit() || c == b'.' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
                end += 1;
            }
            if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                let mut k = end + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    while k < bytes.len() && bytes[k].is_ascii_digit() {
                        k += 1;
                    }
                    end = k;
                }
            }
            let text = &self.src[start..end];
            let value: f64 = text.parse().map_err(|_| FieldError::Syntax {
                offset,
                message: format!("malformed number `{text}`"),
            })?;
            self.pos = end;
            return Ok((Tok::Num(value), offset));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                end += 1;
            }
            self.pos = end;
            return Ok((Tok::Ident(self.src[start..end].to_string()), offset));
        }
        self.pos += 1;
        match c {
            b'+' | b'-' | b'*' | b'/' | b'^' => Ok((Tok::Op(c as char), offset)),
            b'(' => Ok((Tok::LParen, offset)),
            b')' => Ok((Tok::RParen, offset)),
            _ => {
                let ch = self.src[start..].chars().next().unwrap_or('?');
                Err(FieldError::Syntax {
                    offset,
                    message: format!("unexpected character `{ch}`"),
                })
            }
        }
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    tok_offset: usize,
    dimension: usize,
    params: &'a BTreeMap<String, f64>,
}

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<(), FieldError> {
        let (tok, off) = self.lexer.next()?;
        self.tok = tok;
        self.tok_offset = off;
        Ok(())
    }

    fn syntax<T>(&self, message: impl Into<String>) -> Result<T, FieldError> {
        Err(FieldError::Syntax {
            offset: self.tok_offset,
            message: message.into(),
        })
    }

    fn sum(&mut self) -> Result<Expr, FieldError> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.tok {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.product()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn product(&mut self) -> Result<Expr, FieldError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.tok {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.unary()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, FieldError> {
        if self.tok == Tok::Op('-') {
            self.bump()?;
            return Ok(Expr::neg(self.unary()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, FieldError> {
        let base = self.atom()?;
        if self.tok == Tok::Op('^') {
            self.bump()?;
            let exp = self.unary()?;
            return Ok(Expr::bin(BinOp::Pow, base, exp));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, FieldError> {
        match self.tok.clone() {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Expr::Num(v))
            }
            Tok::LParen => {
                self.bump()?;
                let inner = self.sum()?;
                if self.tok != Tok::RParen {
                    return self.syntax("expected `)`");
                }
                self.bump()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                let offset = self.tok_offset;
                self.bump()?;
                if self.tok == Tok::LParen {
                    let Some(func) = Func::from_name(&name) else {
                        return Err(FieldError::UnknownIdentifier { name, offset });
                    };
                    self.bump()?;
                    let arg = self.sum()?;
                    if self.tok != Tok::RParen {
                        return self.syntax("expected `)` after function argument");
                    }
                    self.bump()?;
                    return Ok(Expr::call(func, arg));
                }
                self.resolve(name, offset).map(Expr::Var)
            }
            Tok::End => self.syntax("unexpected end of expression"),
            Tok::Op(c) => self.syntax(format!("unexpected operator `{c}`")),
            Tok::RParen => self.syntax("unexpected `)`"),
        }
    }

    fn resolve(&self, name: String, offset: usize) -> Result<Var, FieldError> {
        if name == "t" {
            return Ok(Var::Time);
        }
        if self.params.contains_key(&name) {
            return Ok(Var::Param(name));
        }
        if let Some(c) = Constant::from_name(&name) {
            return Ok(Var::Const(c));
        }
        if let Some(digits) = name.strip_prefix('x') {
            if let Ok(i) = digits.parse::<usize>() {
                if i >= 1 && i <= self.dimension && !digits.starts_with('0') {
                    return Ok(Var::State(i - 1));
                }
            }
        }
        Err(FieldError::UnknownIdentifier { name, offset })
    }
}

/// Parses a single expression starting at byte `base` of the original source.
fn parse_one(
    src: &str,
    base: usize,
    dimension: usize,
    params: &BTreeMap<String, f64>,
) -> Result<Expr, FieldError> {
    let mut p = Parser {
        lexer: Lexer { src, pos: 0, base },
        tok: Tok::End,
        tok_offset: base,
        dimension,
        params,
    };
    p.bump()?;
    let e = p.sum()?;
    if p.tok != Tok::End {
        return p.syntax("trailing input after expression");
    }
    Ok(e)
}

/// Parses `dimension` semicolon-separated component expressions.
pub fn parse_components(
    source: &str,
    dimension: usize,
    params: &BTreeMap<String, f64>,
) -> Result<Vec<Expr>, FieldError> {
    for name in params.keys() {
        let reserved = name == "t"
            || Constant::from_name(name).is_some()
            || Func::from_name(name).is_some()
            || name.strip_prefix('x').is_some_and(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()));
        let valid = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
            && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if reserved || !valid {
            return Err(FieldError::InvalidParameterName(name.clone()));
        }
    }
    let mut out = Vec::new();
    let mut base = 0;
    for piece in source.split(';') {
        out.push(parse_one(piece, base, dimension, params)?);
        base += piece.len() + 1;
    }
    if out.len() != dimension {
        return Err(FieldError::DimensionMismatch {
            expected: dimension,
            found: out.len(),
        });
    }
    Ok(out)
}
