use num_traits::One;

use super::expr::{Coeff, Op, SymExpr};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Slash,
    Star,
    Plus,
    Minus,
    Open,
    Close,
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>> {
    let mut out = Vec::new();
    let mut chars = src.char_indices().peekable();
    while let Some(&(pos, ch)) = chars.peek() {
        let tok = match ch {
            c if c.is_whitespace() => {
                chars.next();
                continue;
            }
            '/' => Tok::Slash,
            '*' => Tok::Star,
            '+' => Tok::Plus,
            '-' | '−' => Tok::Minus,
            '(' => Tok::Open,
            ')' => Tok::Close,
            c if c.is_ascii_digit() => {
                let mut end = pos;
                while let Some(&(i, d)) = chars.peek() {
                    if !d.is_ascii_digit() {
                        break;
                    }
                    end = i + 1;
                    chars.next();
                }
                let v = src[pos..end]
                    .parse()
                    .map_err(|_| Error::Parse { pos, msg: "integer out of range".into() })?;
                out.push((pos, Tok::Int(v)));
                continue;
            }
            c if c.is_ascii_alphabetic() => {
                let mut end = pos;
                while let Some(&(i, d)) = chars.peek() {
                    if !d.is_ascii_alphanumeric() {
                        break;
                    }
                    end = i + 1;
                    chars.next();
                }
                out.push((pos, Tok::Ident(src[pos..end].to_string())));
                continue;
            }
            c => return Err(Error::Parse { pos, msg: format!("unexpected character {c:?}") }),
        };
        chars.next();
        out.push((pos, tok));
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |(p, _)| *p)
    }

    fn fail<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { pos: self.pos(), msg: msg.into() })
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        if self.peek() == Some(&t) {
            self.at += 1;
            Ok(())
        } else {
            self.fail(format!("expected {t:?}"))
        }
    }

    fn sum(&mut self) -> Result<SymExpr> {
        let mut sign = Coeff::one();
        match self.peek() {
            Some(Tok::Minus) => {
                self.at += 1;
                sign = -sign;
            }
            Some(Tok::Plus) => self.at += 1,
            _ => {}
        }
        let mut acc = self.product()?.scale(sign);
        loop {
            let s = match self.peek() {
                Some(Tok::Plus) => Coeff::one(),
                Some(Tok::Minus) => -Coeff::one(),
                _ => return Ok(acc),
            };
            self.at += 1;
            acc = acc.add(&self.product()?.scale(s));
        }
    }

    fn product(&mut self) -> Result<SymExpr> {
        let mut acc = self.factor()?;
        while self.peek() == Some(&Tok::Star) {
            self.at += 1;
            acc = acc.mul(&self.factor()?);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<SymExpr> {
        match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.at += 1;
                let mut c = Coeff::from_integer(n);
                if self.peek() == Some(&Tok::Slash) {
                    self.at += 1;
                    match self.peek() {
                        Some(Tok::Int(0)) => return self.fail("zero denominator"),
                        Some(Tok::Int(d)) => {
                            c /= Coeff::from_integer(*d);
                            self.at += 1;
                        }
                        _ => return self.fail("expected denominator"),
                    }
                }
                Ok(SymExpr::one().scale(c))
            }
            Some(Tok::Open) => {
                self.at += 1;
                let e = self.sum()?;
                self.expect(Tok::Close)?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                let op = match name.as_str() {
                    "u" => {
                        self.at += 1;
                        return Ok(SymExpr::u());
                    }
                    "ub" => {
                        self.at += 1;
                        return Ok(SymExpr::ubar());
                    }
                    "d" => Op::D,
                    "db" => Op::Dbar,
                    "di" => Op::Dinv,
                    "dbi" => Op::Dbarinv,
                    other => return self.fail(format!("unknown name {other:?}")),
                };
                self.at += 1;
                self.expect(Tok::Open)?;
                let e = self.sum()?;
                self.expect(Tok::Close)?;
                Ok(e.apply(op))
            }
            _ => self.fail("expected a factor"),
        }
    }
}

/// Parses the text syntax into canonical form.
///
/// ```
/// use mnv_core::symbolic::parse;
///
/// let e = parse("d(u*ub)").unwrap();
/// assert_eq!(e, parse("ub*d(u) + u*d(ub)").unwrap());
/// assert_eq!(parse(&e.to_string()).unwrap(), e);
/// ```
pub fn parse(src: &str) -> Result<SymExpr> {
    let mut p = Parser { toks: lex(src)?, at: 0, end: src.len() };
    let e = p.sum()?;
    if p.at != p.toks.len() {
        return p.fail("trailing input");
    }
    Ok(e)
}
