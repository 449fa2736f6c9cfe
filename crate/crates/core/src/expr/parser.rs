//! Recursive-descent parser.
//!
//! ```text
//! expr  := term (("+" | "-") term)*
//! term  := unary (("*" | "/") unary)*
//! unary := "-" unary | power
//! power := atom ("^" unary)?
//! atom  := number | ident | ident "(" expr ")" | "(" expr ")"
//! ```
//!
//! `^` binds tighter than unary minus (`-x^2` is `-(x^2)`) and is right
//! associative. There is no implicit multiplication.

use super::{Expr, Func, Names};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(v) => format!("number {v}"),
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::End => "end of input".into(),
        Tok::Plus => "`+`".into(),
        Tok::Minus => "`-`".into(),
        Tok::Star => "`*`".into(),
        Tok::Slash => "`/`".into(),
        Tok::Caret => "`^`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
    }
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let simple = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(t) = simple {
            out.push((t, start));
            i += 1;
            continue;
        }
        if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| Error::Syntax {
                offset: start,
                message: format!("malformed number `{text}`"),
            })?;
            out.push((Tok::Num(v), start));
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
            continue;
        }
        let ch = src[start..].chars().next().unwrap_or('?');
        return Err(Error::Syntax {
            offset: start,
            message: format!("unexpected character `{ch}`"),
        });
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    names: &'a Names,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected<T>(&self, wanted: &str) -> Result<T> {
        Err(Error::Syntax {
            offset: self.offset(),
            message: format!("expected {wanted}, found {}", describe(self.peek())),
        })
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Slash => {
                    self.bump();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                if *self.peek() != Tok::RParen {
                    return self.unexpected("`)`");
                }
                self.bump();
                Ok(e)
            }
            Tok::Ident(name) => {
                let (_, at) = self.bump();
                if *self.peek() == Tok::LParen {
                    self.bump();
                    let mut args = vec![self.expr()?];
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        args.push(self.expr()?);
                    }
                    if *self.peek() != Tok::RParen {
                        return self.unexpected("`)` or `,`");
                    }
                    self.bump();
                    let Some(func) = Func::from_name(&name) else {
                        return Err(if self.names.lookup(&name).is_some() {
                            Error::Arity {
                                name,
                                offset: at,
                                expected: 0,
                                found: args.len(),
                            }
                        } else {
                            Error::UnknownIdentifier { name, offset: at }
                        });
                    };
                    if args.len() != 1 {
                        return Err(Error::Arity {
                            name,
                            offset: at,
                            expected: 1,
                            found: args.len(),
                        });
                    }
                    return Ok(Expr::Call(func, Box::new(args.pop().unwrap())));
                }
                if let Some(id) = self.names.lookup(&name) {
                    return Ok(Expr::Var(id));
                }
                if Func::from_name(&name).is_some() {
                    return Err(Error::Arity {
                        name,
                        offset: at,
                        expected: 1,
                        found: 0,
                    });
                }
                Err(Error::UnknownIdentifier { name, offset: at })
            }
            _ => self.unexpected("a number, identifier or `(`"),
        }
    }
}

/// Parses `source` against the declared names.
pub fn parse(source: &str, names: &Names) -> Result<Expr> {
    let toks = tokenize(source)?;
    let mut p = Parser { toks, pos: 0, names };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.unexpected("an operator or end of input");
    }
    Ok(e)
}
