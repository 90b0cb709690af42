//! Infix debug rendering. The output is accepted by [`crate::parse`].

use std::fmt;

use num_traits::{One, Signed};

use super::canon::{factors, split_coeff, terms};
use super::{Constant, Expr, Node};

const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match e.node() {
        Node::Add(..) => PREC_ADD,
        Node::Mul(..) => {
            if split_coeff(e).0.is_negative() {
                PREC_NEG
            } else {
                PREC_MUL
            }
        }
        Node::Rational(_) => PREC_MUL,
        Node::Integer(n) if n.is_negative() => PREC_NEG,
        Node::Pow(_, x) if x.is_negative_number() => PREC_MUL,
        Node::Pow(..) => PREC_POW,
        _ => PREC_ATOM,
    }
}

fn write_at(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if precedence(e) < min {
        write!(f, "(")?;
        write_expr(f, e)?;
        write!(f, ")")
    } else {
        write_expr(f, e)
    }
}

fn write_product(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    let (c, rest) = split_coeff(e);
    let mut num_parts: Vec<Expr> = Vec::new();
    let mut den_parts: Vec<Expr> = Vec::new();
    if !rest.is_one() {
        for fac in factors(&rest) {
            match fac.node() {
                Node::Pow(b, x) if x.is_negative_number() => {
                    let px = x.as_rational().unwrap();
                    let inv = super::canon::pow(b.clone(), Expr::number(-px));
                    den_parts.push(inv);
                }
                _ => num_parts.push(fac),
            }
        }
    }
    let mut cabs = c.abs();
    if c.is_negative() {
        write!(f, "-")?;
    }
    let den_c = cabs.denom().clone();
    cabs = num_rational::BigRational::from_integer(cabs.numer().clone());
    let mut first = true;
    if !cabs.is_one() || num_parts.is_empty() {
        write!(f, "{}", cabs)?;
        first = false;
    }
    for p in &num_parts {
        if !first {
            write!(f, "*")?;
        }
        write_at(f, p, PREC_POW)?;
        first = false;
    }
    let mut dens: Vec<String> = Vec::new();
    if !den_c.is_one() {
        dens.push(den_c.to_string());
    }
    for d in &den_parts {
        dens.push(if precedence(d) >= PREC_POW {
            format!("{}", d)
        } else {
            format!("({})", d)
        });
    }
    match dens.len() {
        0 => Ok(()),
        1 => write!(f, "/{}", dens[0]),
        _ => write!(f, "/({})", dens.join("*")),
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    match e.node() {
        Node::Integer(n) => write!(f, "{}", n),
        Node::Rational(r) => write!(f, "{}/{}", r.numer(), r.denom()),
        Node::Symbol(s) => write!(f, "{}", s),
        Node::Constant(Constant::E) => write!(f, "E"),
        Node::Constant(Constant::Pi) => write!(f, "pi"),
        Node::Constant(Constant::I) => write!(f, "I"),
        Node::Add(..) => {
            for (i, t) in terms(e).iter().enumerate() {
                let negative = split_coeff(t).0.is_negative();
                if i == 0 {
                    write_at(f, t, PREC_ADD)?;
                } else if negative {
                    let shown = super::canon::neg(t.clone());
                    write!(f, " - ")?;
                    write_at(f, &shown, PREC_MUL)?;
                } else {
                    write!(f, " + ")?;
                    write_at(f, t, PREC_MUL)?;
                }
            }
            Ok(())
        }
        Node::Mul(..) => write_product(f, e),
        Node::Pow(b, x) => {
            if x.is_negative_number() {
                return write_product(f, e);
            }
            if *x == Expr::rational(1, 2) {
                write!(f, "sqrt(")?;
                write_expr(f, b)?;
                return write!(f, ")");
            }
            write_at(f, b, PREC_ATOM)?;
            write!(f, "^")?;
            write_at(f, x, PREC_ATOM)
        }
        Node::Func(func, a) => {
            write!(f, "{}(", func.name())?;
            write_expr(f, a)?;
            write!(f, ")")
        }
        Node::Integral(a, v) => {
            write!(f, "Integral(")?;
            write_expr(f, a)?;
            write!(f, ", {})", v)
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self)
    }
}
