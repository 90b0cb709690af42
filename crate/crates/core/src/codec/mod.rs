//! Prefix token encoding of expressions and the step-line text format.

mod step;

pub use step::{encode_step_line, parse_step_line, StepRecord};

use std::collections::HashMap;
use std::sync::OnceLock;

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::engine::Action;
use crate::expr::{Constant, Expr, Func, Node, Op, Symbol};

pub const START: &str = "START";
pub const END: &str = "END";
pub const SUBEXPR: &str = "SUBEXPR";
pub const RULE: &str = "RULE";
pub const PARAM: &str = "PARAM";
pub const PARAM1: &str = "PARAM1";
pub const PARAM2: &str = "PARAM2";
pub const INT_POS: &str = "INT+";
pub const INT_NEG: &str = "INT-";
pub const RATIONAL: &str = "RATIONAL";
pub const INTEGRAL: &str = "INTEGRAL";
/// Alternative spelling of [`INTEGRAL`] accepted when parsing.
pub const INTEGRAL_ALIAS: &str = "Integral";
pub const ADD: &str = "+";
pub const MUL: &str = "*";
pub const POW: &str = "POW";

const DIGITS: [&str; 10] = ["0", "1", "2", "3", "4", "5", "6", "7", "8", "9"];
const RESERVED: usize = 19;

/// Size of the token vocabulary.
pub const VOCAB_SIZE: usize = 128;

/// The full vocabulary in id order.
pub fn vocabulary() -> Vec<String> {
    let mut v: Vec<String> = [START, END, SUBEXPR, RULE, PARAM, PARAM1, PARAM2]
        .iter()
        .chain(&[INT_POS, INT_NEG, RATIONAL])
        .chain(DIGITS.iter())
        .map(|s| s.to_string())
        .collect();
    v.extend(Constant::ALL.iter().map(|c| constant_token(*c).to_string()));
    v.extend(Symbol::ALL.iter().map(|s| s.name().to_string()));
    v.extend([INTEGRAL, ADD, POW, MUL].iter().map(|s| s.to_string()));
    v.extend(Func::ALL.iter().map(|f| f.name().to_string()));
    v.extend(Action::ALL.iter().map(|a| a.name().to_string()));
    v.extend((0..RESERVED).map(|k| format!("RESERVED{k}")));
    v
}

/// Id of a token in [`vocabulary`], accepting the parse-time aliases.
pub fn token_id(tok: &str) -> Option<usize> {
    let canonical = if tok == INTEGRAL_ALIAS {
        INTEGRAL.to_string()
    } else if let Some(a) = Action::from_name(tok) {
        a.name().to_string()
    } else {
        tok.to_string()
    };
    static IDS: OnceLock<HashMap<String, usize>> = OnceLock::new();
    let ids = IDS.get_or_init(|| {
        vocabulary()
            .into_iter()
            .enumerate()
            .map(|(i, t)| (t, i))
            .collect()
    });
    ids.get(&canonical).copied()
}

pub fn constant_token(c: Constant) -> &'static str {
    match c {
        Constant::E => "E",
        Constant::Pi => "pi",
        Constant::I => "I",
    }
}

fn op_token(op: Op) -> &'static str {
    match op {
        Op::Integral => INTEGRAL,
        Op::Add => ADD,
        Op::Mul => MUL,
        Op::Pow => POW,
        Op::Func(f) => f.name(),
    }
}

fn push_int(n: &BigInt, out: &mut Vec<&'static str>) {
    out.push(if n.is_negative() { INT_NEG } else { INT_POS });
    for d in n.magnitude().to_str_radix(10).bytes() {
        out.push(DIGITS[(d - b'0') as usize]);
    }
}

/// Prefix traversal of `e`, first child first.
pub fn tree_to_seq(e: &Expr) -> Vec<&'static str> {
    let mut out = Vec::with_capacity(e.size() * 2);
    write_seq(e, &mut out);
    out
}

fn write_seq(e: &Expr, out: &mut Vec<&'static str>) {
    match e.node() {
        Node::Integer(n) => push_int(n, out),
        Node::Rational(r) => {
            out.push(RATIONAL);
            push_int(r.numer(), out);
            push_int(r.denom(), out);
        }
        Node::Symbol(s) => out.push(s.name()),
        Node::Constant(c) => out.push(constant_token(*c)),
        _ => {
            out.push(op_token(e.op().unwrap()));
            match e.node() {
                Node::Integral(a, v) => {
                    write_seq(a, out);
                    out.push(v.name());
                }
                _ => {
                    for c in e.children() {
                        write_seq(&c, out);
                    }
                }
            }
        }
    }
}

/// Space-separated prefix encoding.
pub fn tree_to_text(e: &Expr) -> String {
    tree_to_seq(e).join(" ")
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecErrorKind {
    #[error("sequence ended before every operator received its children")]
    Truncated,
    #[error("unknown token")]
    UnknownToken,
    #[error("tokens remain after a complete expression")]
    Trailing,
    #[error("integer token without digits")]
    MissingDigits,
    #[error("rational with zero denominator")]
    ZeroDenominator,
    #[error("second child of an integral must be a symbol")]
    IntegralVariable,
    #[error("token cannot start an expression")]
    Unexpected,
    #[error("expected {0}")]
    Expected(&'static str),
    #[error("rule takes {expected} parameters, line has {got}")]
    ParamCount { expected: usize, got: usize },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{kind} at byte {offset} (token {token:?})")]
pub struct CodecError {
    pub kind: CodecErrorKind,
    /// Byte offset of the offending token in the input text, or its length
    /// when the input ended early.
    pub offset: usize,
    pub token: String,
}

/// A token with its byte offset in the source text.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Spanned<'a> {
    pub text: &'a str,
    pub offset: usize,
}

/// Split on ASCII whitespace, keeping byte offsets.
pub fn tokenize(text: &str) -> Vec<Spanned<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in text.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Spanned {
                    text: &text[s..i],
                    offset: s,
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Spanned {
            text: &text[s..],
            offset: s,
        });
    }
    out
}

pub(crate) struct Cursor<'a, 'b> {
    toks: &'b [Spanned<'a>],
    pos: usize,
    end_offset: usize,
}

impl<'a, 'b> Cursor<'a, 'b> {
    pub(crate) fn new(toks: &'b [Spanned<'a>], end_offset: usize) -> Self {
        Cursor {
            toks,
            pos: 0,
            end_offset,
        }
    }

    pub(crate) fn peek(&self) -> Option<Spanned<'a>> {
        self.toks.get(self.pos).copied()
    }

    pub(crate) fn next(&mut self) -> Result<Spanned<'a>, CodecError> {
        let t = self.peek().ok_or_else(|| self.error_at_end(CodecErrorKind::Truncated))?;
        self.pos += 1;
        Ok(t)
    }

    pub(crate) fn done(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub(crate) fn error_at_end(&self, kind: CodecErrorKind) -> CodecError {
        CodecError {
            kind,
            offset: self.end_offset,
            token: String::new(),
        }
    }

    pub(crate) fn expect(&mut self, tok: &'static str) -> Result<(), CodecError> {
        match self.peek() {
            Some(t) if t.text == tok => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(error(CodecErrorKind::Expected(tok), t)),
            None => Err(self.error_at_end(CodecErrorKind::Expected(tok))),
        }
    }

    fn integer(&mut self, sign: Sign) -> Result<BigInt, CodecError> {
        let mut digits = String::new();
        while let Some(t) = self.peek() {
            if t.text.len() == 1 && t.text.as_bytes()[0].is_ascii_digit() {
                digits.push_str(t.text);
                self.pos += 1;
            } else {
                break;
            }
        }
        if digits.is_empty() {
            return Err(match self.peek() {
                Some(t) => error(CodecErrorKind::MissingDigits, t),
                None => self.error_at_end(CodecErrorKind::MissingDigits),
            });
        }
        let mag = BigInt::parse_bytes(digits.as_bytes(), 10).unwrap();
        Ok(if sign == Sign::Minus { -mag } else { mag })
    }

    fn signed_integer(&mut self) -> Result<BigInt, CodecError> {
        let t = self.next()?;
        match t.text {
            INT_POS => self.integer(Sign::Plus),
            INT_NEG => self.integer(Sign::Minus),
            _ => Err(error(CodecErrorKind::Expected("INT+ or INT-"), t)),
        }
    }

    /// Parse one expression, returning it without canonicalisation.
    pub(crate) fn expr(&mut self) -> Result<Expr, CodecError> {
        let t = self.next()?;
        match t.text {
            INT_POS => Ok(Expr::int(self.integer(Sign::Plus)?)),
            INT_NEG => Ok(Expr::int(self.integer(Sign::Minus)?)),
            RATIONAL => {
                let n = self.signed_integer()?;
                let d = self.signed_integer()?;
                if d.is_zero() {
                    return Err(error(CodecErrorKind::ZeroDenominator, t));
                }
                Ok(Expr::number(BigRational::new(n, d)))
            }
            INTEGRAL | INTEGRAL_ALIAS => {
                let body = self.expr()?;
                let v = self.next()?;
                let s = Symbol::from_name(v.text)
                    .ok_or_else(|| error(CodecErrorKind::IntegralVariable, v))?;
                Ok(Expr::integral(body, s))
            }
            ADD | MUL | POW => {
                let a = self.expr()?;
                let b = self.expr()?;
                Ok(match t.text {
                    ADD => Expr::raw_add(a, b),
                    MUL => Expr::raw_mul(a, b),
                    _ => Expr::raw_pow(a, b),
                })
            }
            s => {
                if let Some(sym) = Symbol::from_name(s) {
                    return Ok(Expr::symbol(sym));
                }
                if let Some(c) = Constant::ALL.into_iter().find(|c| constant_token(*c) == s) {
                    return Ok(Expr::constant(c));
                }
                if let Some(f) = Func::from_name(s) {
                    let a = self.expr()?;
                    return Ok(Expr::raw_func(f, a));
                }
                let kind = if token_id(s).is_some() {
                    CodecErrorKind::Unexpected
                } else {
                    CodecErrorKind::UnknownToken
                };
                Err(error(kind, t))
            }
        }
    }
}

fn error(kind: CodecErrorKind, t: Spanned<'_>) -> CodecError {
    CodecError {
        kind,
        offset: t.offset,
        token: t.text.to_string(),
    }
}

/// Expressions serialize as their prefix token sequence.
impl serde::Serialize for Expr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(tree_to_seq(self))
    }
}

impl<'de> serde::Deserialize<'de> for Expr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Expr, D::Error> {
        let toks: Vec<String> = serde::Deserialize::deserialize(d)?;
        tokens_to_tree(&toks).map_err(serde::de::Error::custom)
    }
}

/// Parse a complete prefix sequence into a canonical expression.
pub fn seq_to_tree(text: &str) -> Result<Expr, CodecError> {
    let toks = tokenize(text);
    let mut cur = Cursor::new(&toks, text.len());
    let e = cur.expr()?;
    if let Some(t) = cur.peek() {
        return Err(error(CodecErrorKind::Trailing, t));
    }
    Ok(crate::expr::canonicalize(&e))
}

/// Parse a token slice (as produced by [`tree_to_seq`] or received over the
/// wire).
pub fn tokens_to_tree<S: AsRef<str>>(tokens: &[S]) -> Result<Expr, CodecError> {
    let joined: Vec<&str> = tokens.iter().map(|s| s.as_ref()).collect();
    if joined.iter().any(|t| t.is_empty() || t.chars().any(char::is_whitespace)) {
        let bad = joined
            .iter()
            .position(|t| t.is_empty() || t.chars().any(char::is_whitespace))
            .unwrap();
        let offset = joined[..bad].iter().map(|t| t.len() + 1).sum();
        return Err(CodecError {
            kind: CodecErrorKind::UnknownToken,
            offset,
            token: joined[bad].to_string(),
        });
    }
    seq_to_tree(&joined.join(" "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::canon::*;

    #[test]
    fn vocabulary_is_exactly_128_distinct_tokens() {
        let v = vocabulary();
        assert_eq!(v.len(), VOCAB_SIZE);
        let mut s = v.clone();
        s.sort();
        s.dedup();
        assert_eq!(s.len(), VOCAB_SIZE);
    }

    #[test]
    fn checked_in_manifest_matches() {
        let manifest = include_str!("../../tokens.txt");
        let lines: Vec<(usize, String)> = manifest
            .lines()
            .map(|l| {
                let (id, tok) = l.split_once(' ').unwrap();
                (id.parse().unwrap(), tok.to_string())
            })
            .collect();
        let expected: Vec<(usize, String)> = vocabulary().into_iter().enumerate().collect();
        assert_eq!(lines, expected);
    }

    #[test]
    fn every_action_has_a_token() {
        for a in Action::ALL {
            assert!(token_id(a.name()).is_some());
        }
    }

    #[test]
    fn reference_token_string() {
        let text = "INTEGRAL + POW + INT+ 3 x INT- 1 * INT+ 2 POW cosh x INT+ 2 x";
        let e = seq_to_tree(text).unwrap();
        let x = Expr::x();
        let body = add(recip(add(x.clone(), num(3))), mul(num(2), square(func(Func::Cosh, x))));
        assert_eq!(e, Expr::integral(body, Symbol::X));
        assert_eq!(tree_to_text(&e), text);
    }

    #[test]
    fn leaves_and_rationals() {
        assert_eq!(tree_to_text(&Expr::x()), "x");
        assert_eq!(tree_to_text(&Expr::rational(-7, 2)), "RATIONAL INT- 7 INT+ 2");
        assert_eq!(seq_to_tree("RATIONAL INT- 7 INT+ 2").unwrap(), Expr::rational(-7, 2));
        assert_eq!(tree_to_text(&num(-120)), "INT- 1 2 0");
    }

    #[test]
    fn errors_carry_byte_offsets() {
        let e = seq_to_tree("+ x").unwrap_err();
        assert_eq!(e.kind, CodecErrorKind::Truncated);
        assert_eq!(e.offset, 3);
        let e = seq_to_tree("sin x bogus").unwrap_err();
        assert_eq!(e.kind, CodecErrorKind::Trailing);
        assert_eq!(e.offset, 6);
        let e = seq_to_tree("sin foo").unwrap_err();
        assert_eq!(e.kind, CodecErrorKind::UnknownToken);
        assert_eq!(e.offset, 4);
        let e = seq_to_tree("RATIONAL INT+ 1 INT+ 0").unwrap_err();
        assert_eq!(e.kind, CodecErrorKind::ZeroDenominator);
        let e = seq_to_tree("INTEGRAL x INT+ 2").unwrap_err();
        assert_eq!(e.kind, CodecErrorKind::IntegralVariable);
        let e = seq_to_tree("INT+ x").unwrap_err();
        assert_eq!(e.kind, CodecErrorKind::MissingDigits);
        let e = seq_to_tree("END").unwrap_err();
        assert_eq!(e.kind, CodecErrorKind::Unexpected);
    }

    #[test]
    fn alias_spelling_of_integral() {
        let a = seq_to_tree("Integral cos x x").unwrap();
        assert_eq!(tree_to_text(&a), "INTEGRAL cos x x");
    }
}
