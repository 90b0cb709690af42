//! Symbolic differentiation.

use thiserror::Error;

use super::canon::{add, add_all, div, func, mul, mul_all, neg, num, pow, recip, sqrt, square, sub};
use super::{Constant, Expr, Func, Node, Symbol};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DiffError {
    #[error("cannot differentiate an integral node: {0}")]
    Integral(Expr),
}

/// Canonical derivative of `e` with respect to `v`. Children are assumed
/// canonical.
pub fn differentiate(e: &Expr, v: Symbol) -> Result<Expr, DiffError> {
    if e.is_free_of(v) && !e.has_integral() {
        return Ok(num(0));
    }
    Ok(match e.node() {
        Node::Integer(_) | Node::Rational(_) | Node::Constant(_) => num(0),
        Node::Symbol(s) => num(if *s == v { 1 } else { 0 }),
        Node::Add(a, b) => add(differentiate(a, v)?, differentiate(b, v)?),
        Node::Mul(a, b) => add(
            mul(differentiate(a, v)?, b.clone()),
            mul(a.clone(), differentiate(b, v)?),
        ),
        Node::Pow(b, x) => {
            if x.is_free_of(v) {
                mul_all([
                    x.clone(),
                    pow(b.clone(), sub(x.clone(), num(1))),
                    differentiate(b, v)?,
                ])
            } else if b.is_free_of(v) {
                mul_all([e.clone(), func(Func::Log, b.clone()), differentiate(x, v)?])
            } else {
                let inner = add(
                    mul(differentiate(x, v)?, func(Func::Log, b.clone())),
                    mul_all([x.clone(), differentiate(b, v)?, recip(b.clone())]),
                );
                mul(e.clone(), inner)
            }
        }
        Node::Func(f, a) => mul(func_derivative(*f, a), differentiate(a, v)?),
        Node::Integral(..) => return Err(DiffError::Integral(e.clone())),
    })
}

/// f'(a) for a unary function, in forms consistent with the principal
/// branches used by the numeric evaluator.
pub fn func_derivative(f: Func, a: &Expr) -> Expr {
    use Func::*;
    let a = a.clone();
    let one = || num(1);
    let inv_sq = || pow(a.clone(), num(-2));
    match f {
        Sin => func(Cos, a),
        Cos => neg(func(Sin, a)),
        Tan => square(func(Sec, a)),
        Cot => neg(square(func(Csc, a))),
        Sec => mul(func(Sec, a.clone()), func(Tan, a)),
        Csc => neg(mul(func(Csc, a.clone()), func(Cot, a))),
        Asin => recip(sqrt(sub(one(), square(a)))),
        Acos => neg(recip(sqrt(sub(one(), square(a))))),
        Atan => recip(add(one(), square(a))),
        Acot => neg(recip(add(one(), square(a)))),
        // asec(z) = acos(1/z), acsc(z) = asin(1/z)
        Asec => mul(inv_sq(), recip(sqrt(sub(one(), inv_sq())))),
        Acsc => neg(mul(inv_sq(), recip(sqrt(sub(one(), inv_sq()))))),
        Sinh => func(Cosh, a),
        Cosh => func(Sinh, a),
        Tanh => square(func(Sech, a)),
        Coth => neg(square(func(Csch, a))),
        Sech => neg(mul(func(Sech, a.clone()), func(Tanh, a))),
        Csch => neg(mul(func(Csch, a.clone()), func(Coth, a))),
        Asinh => recip(sqrt(add(square(a), one()))),
        Acosh => recip(mul(sqrt(sub(a.clone(), one())), sqrt(add(a, one())))),
        Atanh | Acoth => recip(sub(one(), square(a))),
        // asech(z) = acosh(1/z), acsch(z) = asinh(1/z)
        Asech => neg(mul(
            inv_sq(),
            recip(mul(
                sqrt(sub(recip(a.clone()), one())),
                sqrt(add(recip(a), one())),
            )),
        )),
        Acsch => neg(mul(inv_sq(), recip(sqrt(add(inv_sq(), one()))))),
        Exp => func(Exp, a),
        Log => recip(a),
        Erf => mul_all([
            num(2),
            recip(sqrt(Expr::constant(Constant::Pi))),
            func(Exp, neg(square(a))),
        ]),
        Ei => div(func(Exp, a.clone()), a),
        Ci => div(func(Cos, a.clone()), a),
        Si => div(func(Sin, a.clone()), a),
    }
}

/// Derivative that treats `∫ h dv` as an antiderivative of `h` in `v`.
/// Integrals over any other variable are rejected.
pub fn differentiate_through_integrals(e: &Expr, v: Symbol) -> Result<Expr, DiffError> {
    if !e.has_integral() {
        return differentiate(e, v);
    }
    Ok(match e.node() {
        Node::Integral(h, w) if *w == v => h.clone(),
        Node::Integral(..) => return Err(DiffError::Integral(e.clone())),
        Node::Add(..) => add_all(
            super::canon::terms(e)
                .iter()
                .map(|t| differentiate_through_integrals(t, v))
                .collect::<Result<Vec<_>, _>>()?,
        ),
        Node::Mul(a, b) => add(
            mul(differentiate_through_integrals(a, v)?, b.clone()),
            mul(a.clone(), differentiate_through_integrals(b, v)?),
        ),
        _ => return Err(DiffError::Integral(e.clone())),
    })
}
