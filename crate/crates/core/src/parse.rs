//! Infix parser for user input, e.g. `x*cos(2*x) + 1/(x^2 + 1)`.
//!
//! Grammar: `+ - * / ^` (also `**`), unary minus, parentheses, integer and
//! decimal literals (read exactly), implicit products such as `2x` or
//! `3 sin(x)`, the symbols `x y z u v w t`, the constants `E` (or `e`), `pi`
//! and `I`, every function by name plus `sqrt` and `ln`, and
//! `Integral(f, x)`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Num;
use thiserror::Error;

use crate::expr::canon::{add, div, func, mul, neg, pow, sqrt, sub};
use crate::expr::{canonicalize, Constant, Expr, Func, Symbol};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} at offset {offset}")]
pub struct ParseError {
    pub message: String,
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

fn lex(s: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let b = s.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i] as char;
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && i + 1 < b.len() && (b[i + 1] as char).is_ascii_digit()) {
            while i < b.len() && (b[i] as char).is_ascii_digit() {
                i += 1;
            }
            let int_part = &s[start..i];
            let mut frac = "";
            if i < b.len() && b[i] == b'.' {
                i += 1;
                let fs = i;
                while i < b.len() && (b[i] as char).is_ascii_digit() {
                    i += 1;
                }
                frac = &s[fs..i];
            }
            let digits = format!("{}{}", int_part, frac);
            let n = BigInt::from_str_radix(if digits.is_empty() { "0" } else { &digits }, 10)
                .map_err(|_| err("bad number", start))?;
            let d = BigInt::from(10u32).pow(frac.len() as u32);
            out.push((Tok::Num(BigRational::new(n, d)), start));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while i < b.len() && ((b[i] as char).is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(s[start..i].to_string()), start));
            continue;
        }
        let tok = match c {
            '*' if i + 1 < b.len() && b[i + 1] == b'*' => {
                i += 1;
                Tok::Op('^')
            }
            '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
            '(' | '[' => Tok::LParen,
            ')' | ']' => Tok::RParen,
            ',' => Tok::Comma,
            _ => {
                let ch = s[start..].chars().next().unwrap_or('?');
                return Err(err(&format!("unexpected character '{}'", ch), start));
            }
        };
        i += 1;
        out.push((tok, start));
    }
    Ok(out)
}

fn err(message: &str, offset: usize) -> ParseError {
    ParseError {
        message: message.to_string(),
        offset,
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.1)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.0.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(err(&format!("expected {}", what), self.offset()))
        }
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.product()?;
        loop {
            match self.peek() {
                Some(Tok::Op('+')) => {
                    self.pos += 1;
                    e = add(e, self.product()?);
                }
                Some(Tok::Op('-')) => {
                    self.pos += 1;
                    e = sub(e, self.product()?);
                }
                _ => return Ok(e),
            }
        }
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Op('*')) => {
                    self.pos += 1;
                    e = mul(e, self.unary()?);
                }
                Some(Tok::Op('/')) => {
                    let at = self.offset();
                    self.pos += 1;
                    let d = self.unary()?;
                    if d.is_zero() {
                        return Err(err("division by zero", at));
                    }
                    e = div(e, d);
                }
                Some(Tok::Num(_) | Tok::Ident(_) | Tok::LParen) => {
                    e = mul(e, self.power()?);
                }
                _ => return Ok(e),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(Tok::Op('-')) => {
                self.pos += 1;
                Ok(neg(self.unary()?))
            }
            Some(Tok::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some(&Tok::Op('^')) {
            self.pos += 1;
            let exp = self.unary()?;
            if base.is_zero() && exp.is_negative_number() {
                return Err(err("division by zero", self.offset()));
            }
            return Ok(pow(base, exp));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let at = self.offset();
        match self.bump() {
            Some(Tok::Num(r)) => Ok(Expr::number(r)),
            Some(Tok::LParen) => {
                let e = self.sum()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => self.ident(&name, at),
            Some(t) => Err(err(&format!("unexpected {:?}", t), at)),
            None => Err(err("unexpected end of input", at)),
        }
    }

    fn call_arg(&mut self) -> Result<Expr, ParseError> {
        self.expect(Tok::LParen, "'('")?;
        let e = self.sum()?;
        self.expect(Tok::RParen, "')'")?;
        Ok(e)
    }

    fn ident(&mut self, name: &str, at: usize) -> Result<Expr, ParseError> {
        if let Some(s) = Symbol::from_name(name) {
            return Ok(Expr::symbol(s));
        }
        match name {
            "E" | "e" => return Ok(Expr::constant(Constant::E)),
            "pi" | "Pi" | "PI" => return Ok(Expr::constant(Constant::Pi)),
            "I" => return Ok(Expr::constant(Constant::I)),
            "sqrt" => return Ok(sqrt(self.call_arg()?)),
            "Integral" | "integral" => {
                self.expect(Tok::LParen, "'('")?;
                let body = self.sum()?;
                self.expect(Tok::Comma, "','")?;
                let vat = self.offset();
                let v = match self.bump() {
                    Some(Tok::Ident(v)) => Symbol::from_name(&v),
                    _ => None,
                }
                .ok_or_else(|| err("expected integration variable", vat))?;
                self.expect(Tok::RParen, "')'")?;
                return Ok(Expr::integral(body, v));
            }
            _ => {}
        }
        let f = match name {
            "ln" => Some(Func::Log),
            "arcsin" => Some(Func::Asin),
            "arccos" => Some(Func::Acos),
            "arctan" => Some(Func::Atan),
            "arcsinh" => Some(Func::Asinh),
            "arccosh" => Some(Func::Acosh),
            "arctanh" => Some(Func::Atanh),
            _ => Func::from_name(name),
        };
        match f {
            Some(f) => Ok(func(f, self.call_arg()?)),
            None => Err(err(&format!("unknown name '{}'", name), at)),
        }
    }
}

/// Parse infix text into a canonical expression.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let toks = lex(text)?;
    if toks.is_empty() {
        return Err(err("empty input", 0));
    }
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
    };
    let e = p.sum()?;
    if p.pos < p.toks.len() {
        return Err(err("trailing input", p.offset()));
    }
    Ok(canonicalize(&e))
}
