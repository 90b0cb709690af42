//! Table rules: each closes `∫F dx` for one integrand shape.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};

use crate::expr::canon::{
    add, add_all, div, factors, func, mul, mul_all, neg, num, pow, recip, sqrt, square, sub, terms,
};
use crate::expr::{Expr, Func, Node, Symbol};
use crate::poly::{affine, coefficients, numeric_sign};

use super::Action;

/// Largest power handled by the closed form of the incomplete gamma rule.
pub const MAX_GAMMA_POWER: i64 = 30;

/// The antiderivative produced by a parameterless table rule.
pub fn antiderivative(action: Action, f: &Expr, x: Symbol) -> Option<Expr> {
    use Action::*;
    match action {
        Constant => constant(f, x),
        Power => power(f, x),
        Exp => exp(f, x),
        Reciprocal => reciprocal(f, x),
        NestedPow => nested_pow(f, x),
        Arcsin => arcsin(f, x),
        Arcsinh => arcsinh(f, x),
        Sin => unary(f, x, Func::Sin).map(|a| neg(func(Func::Cos, a))),
        Cos => unary(f, x, Func::Cos).map(|a| func(Func::Sin, a)),
        SecTan => pair(f, x, Func::Sec, Func::Tan).map(|a| func(Func::Sec, a)),
        CscCot => pair(f, x, Func::Csc, Func::Cot).map(|a| neg(func(Func::Csc, a))),
        Sec2 => squared(f, x, Func::Sec).map(|a| func(Func::Tan, a)),
        Csc2 => squared(f, x, Func::Csc).map(|a| neg(func(Func::Cot, a))),
        Sinh => unary(f, x, Func::Sinh).map(|a| func(Func::Cosh, a)),
        Cosh => unary(f, x, Func::Cosh).map(|a| func(Func::Sinh, a)),
        Arctan => arctan(f, x),
        ReciprocalSqrtQuadratic => reciprocal_sqrt_quadratic(f, x),
        Ci => ci(f, x),
        Ei => ei(f, x),
        UpperGamma => upper_gamma(f, x),
        _ => None,
    }
}

fn var(x: Symbol) -> Expr {
    Expr::symbol(x)
}

fn is_const(e: &Expr, x: Symbol) -> bool {
    e.is_free_of(x) && !e.has_integral()
}

/// Nonzero, decidably.
fn nonzero(e: &Expr) -> bool {
    if let Some(r) = e.as_rational() {
        return !num_traits::Zero::is_zero(&r);
    }
    if !e.symbols().is_empty() || e.has_integral() {
        return false;
    }
    crate::numeric::eval_real_point(e, &[]).is_ok_and(|z| z.norm() > 1e-12)
}

fn positive(e: &Expr) -> bool {
    numeric_sign(e) == Some(1)
}

fn constant(f: &Expr, x: Symbol) -> Option<Expr> {
    is_const(f, x).then(|| mul(f.clone(), var(x)))
}

fn power(f: &Expr, x: Symbol) -> Option<Expr> {
    if f.as_symbol() == Some(x) {
        return Some(div(square(var(x)), num(2)));
    }
    let Node::Pow(b, n) = f.node() else { return None };
    if b.as_symbol() != Some(x) || !is_const(n, x) {
        return None;
    }
    let n1 = add(n.clone(), num(1));
    nonzero(&n1).then(|| div(pow(var(x), n1.clone()), n1))
}

fn exp(f: &Expr, x: Symbol) -> Option<Expr> {
    if f.func_arg(Func::Exp).and_then(|a| a.as_symbol()) == Some(x) {
        return Some(f.clone());
    }
    let Node::Pow(a, e) = f.node() else { return None };
    if e.as_symbol() != Some(x) || !is_const(a, x) {
        return None;
    }
    let l = func(Func::Log, a.clone());
    nonzero(&l).then(|| div(f.clone(), l))
}

fn reciprocal(f: &Expr, x: Symbol) -> Option<Expr> {
    (*f == recip(var(x))).then(|| func(Func::Log, var(x)))
}

fn nested_pow(f: &Expr, x: Symbol) -> Option<Expr> {
    let Node::Pow(inner, b) = f.node() else { return None };
    let Node::Pow(base, a) = inner.node() else { return None };
    if base.as_symbol() != Some(x) || !is_const(a, x) || !is_const(b, x) {
        return None;
    }
    let k = add(mul(a.clone(), b.clone()), num(1));
    nonzero(&k).then(|| div(mul(var(x), f.clone()), k))
}

/// `f = q(x)^e` with `q` a quadratic in `x` free of a linear term when
/// `centered`; returns the coefficients `[c0, c1, c2]`.
fn quadratic_power(f: &Expr, x: Symbol, e: &Expr) -> Option<Vec<Expr>> {
    let Node::Pow(q, k) = f.node() else { return None };
    if k != e {
        return None;
    }
    let c = coefficients(q, x, 2)?;
    (!c[2].is_zero()).then_some(c)
}

fn arcsin(f: &Expr, x: Symbol) -> Option<Expr> {
    // (a - b x^2)^(-1/2) -> asin(x sqrt(b/a)) / sqrt(b)
    let c = quadratic_power(f, x, &Expr::rational(-1, 2))?;
    let (a, b) = (c[0].clone(), neg(c[2].clone()));
    if !c[1].is_zero() || !positive(&a) || !positive(&b) {
        return None;
    }
    Some(div(
        func(Func::Asin, mul(var(x), sqrt(div(b.clone(), a)))),
        sqrt(b),
    ))
}

fn arcsinh(f: &Expr, x: Symbol) -> Option<Expr> {
    // (b x^2 + a)^(-1/2) -> asinh(x sqrt(b/a)) / sqrt(b)
    let c = quadratic_power(f, x, &Expr::rational(-1, 2))?;
    let (a, b) = (c[0].clone(), c[2].clone());
    if !c[1].is_zero() || !positive(&a) || !positive(&b) {
        return None;
    }
    Some(div(
        func(Func::Asinh, mul(var(x), sqrt(div(b.clone(), a)))),
        sqrt(b),
    ))
}

fn arctan(f: &Expr, x: Symbol) -> Option<Expr> {
    // 1/(a x^2 + b)
    let c = quadratic_power(f, x, &num(-1))?;
    if !c[1].is_zero() {
        return None;
    }
    let (b, a) = (c[0].clone(), c[2].clone());
    let (sa, sb) = (numeric_sign(&a)?, numeric_sign(&b)?);
    if sa == 0 || sb == 0 {
        return None;
    }
    let k = sqrt(div(a.clone(), b.clone()));
    Some(if sa == sb {
        // same signs: s * atan(x sqrt(a/b)) / sqrt(ab)
        let s = num(sa as i64);
        mul_all([s, func(Func::Atan, mul(var(x), k)), recip(sqrt(mul(a, b)))])
    } else {
        // opposite signs: 1/(|b| - |a| x^2) or its negative, via atanh
        let (aa, ab) = (mul(num(sa as i64), a), mul(num(sb as i64), b));
        let k = sqrt(div(aa.clone(), ab.clone()));
        mul_all([
            num(sb as i64),
            func(Func::Atanh, mul(var(x), k)),
            recip(sqrt(mul(aa, ab))),
        ])
    })
}

fn reciprocal_sqrt_quadratic(f: &Expr, x: Symbol) -> Option<Expr> {
    // 1/sqrt(a x^2 + b x + c), a > 0 -> log(2 sqrt(a) sqrt(Q) + 2 a x + b) / sqrt(a)
    let c = quadratic_power(f, x, &Expr::rational(-1, 2))?;
    let (a, b) = (c[2].clone(), c[1].clone());
    if !positive(&a) {
        return None;
    }
    let Node::Pow(q, _) = f.node() else { unreachable!() };
    let inner = add_all([
        mul_all([num(2), sqrt(a.clone()), sqrt(q.clone())]),
        mul_all([num(2), a.clone(), var(x)]),
        b,
    ]);
    Some(div(func(Func::Log, inner), sqrt(a)))
}

/// `f = g(x) / x` for a single other factor `g`.
fn over_x(f: &Expr, x: Symbol) -> Option<Expr> {
    let fs = factors(f);
    if fs.len() != 2 {
        return None;
    }
    let rx = recip(var(x));
    match (fs[0] == rx, fs[1] == rx) {
        (true, false) => Some(fs[1].clone()),
        (false, true) => Some(fs[0].clone()),
        _ => None,
    }
}

fn ci(f: &Expr, x: Symbol) -> Option<Expr> {
    // cos(a x + b)/x -> cos(b) Ci(a x) - sin(b) Si(a x), a > 0
    let g = over_x(f, x)?;
    let (a, b) = affine(g.func_arg(Func::Cos)?, x)?;
    let (a, b) = match numeric_sign(&a)? {
        1 => (a, b),
        -1 => (neg(a), neg(b)),
        _ => return None,
    };
    let ax = mul(a, var(x));
    Some(sub(
        mul(func(Func::Cos, b.clone()), func(Func::Ci, ax.clone())),
        mul(func(Func::Sin, b), func(Func::Si, ax)),
    ))
}

fn ei(f: &Expr, x: Symbol) -> Option<Expr> {
    // exp(a x + b)/x -> e^b Ei(a x)
    let g = over_x(f, x)?;
    let (a, b) = affine(g.func_arg(Func::Exp)?, x)?;
    if !nonzero(&a) {
        return None;
    }
    Some(mul(func(Func::Exp, b), func(Func::Ei, mul(a, var(x)))))
}

fn upper_gamma(f: &Expr, x: Symbol) -> Option<Expr> {
    // x^n exp(a x), -1 <= n <= MAX_GAMMA_POWER
    let mut n: i64 = 0;
    let mut a: Option<Expr> = None;
    for fac in factors(f) {
        if fac.as_symbol() == Some(x) {
            n += 1;
            continue;
        }
        match fac.node() {
            Node::Pow(b, k) if b.as_symbol() == Some(x) => n += k.as_i64()?,
            Node::Func(Func::Exp, arg) if a.is_none() => {
                let c = coefficients(arg, x, 1)?;
                if !c[0].is_zero() || !nonzero(&c[1]) {
                    return None;
                }
                a = Some(c[1].clone());
            }
            _ => return None,
        }
    }
    let a = a?;
    if !(-1..=MAX_GAMMA_POWER).contains(&n) {
        return None;
    }
    let ax = mul(a.clone(), var(x));
    if n == -1 {
        return Some(func(Func::Ei, ax));
    }
    // e^{ax} sum_k (-1)^k n!/(n-k)! x^{n-k} / a^{k+1}
    let mut coeff = BigInt::from(1);
    let mut parts = Vec::new();
    for k in 0..=n {
        let sign = if k % 2 == 0 { 1 } else { -1 };
        parts.push(mul_all([
            Expr::int(coeff.clone() * sign),
            pow(var(x), num(n - k)),
            pow(a.clone(), num(-(k + 1))),
        ]));
        coeff *= n - k;
    }
    Some(mul(func(Func::Exp, ax), add_all(parts)))
}

/// `f = F(arg)` for the given function; returns `arg` if it is exactly `x`.
fn unary(f: &Expr, x: Symbol, which: Func) -> Option<Expr> {
    let a = f.func_arg(which)?;
    (a.as_symbol() == Some(x)).then(|| a.clone())
}

fn squared(f: &Expr, x: Symbol, which: Func) -> Option<Expr> {
    let Node::Pow(b, k) = f.node() else { return None };
    if k.as_i64() != Some(2) {
        return None;
    }
    unary(b, x, which)
}

fn pair(f: &Expr, x: Symbol, p: Func, q: Func) -> Option<Expr> {
    let fs = factors(f);
    if fs.len() != 2 {
        return None;
    }
    let xv = var(x);
    let want_p = func(p, xv.clone());
    let want_q = func(q, xv.clone());
    ((fs[0] == want_p && fs[1] == want_q) || (fs[0] == want_q && fs[1] == want_p)).then_some(xv)
}

/// Split `f` into its factor free of `x` and the rest.
pub fn split_constant(f: &Expr, x: Symbol) -> (Expr, Expr) {
    let (c, r): (Vec<Expr>, Vec<Expr>) = factors(f).into_iter().partition(|e| is_const(e, x));
    (mul_all(c), mul_all(r))
}

/// ConstantTimesRule with an explicit constant.
pub fn constant_times(f: &Expr, x: Symbol, c: &Expr) -> Option<Expr> {
    let (k, rest) = split_constant(f, x);
    if k.is_one() || rest.is_one() || k != *c {
        return None;
    }
    Some(mul(k, Expr::integral(rest, x)))
}

/// AddRule: split over every term.
pub fn add_rule(f: &Expr, x: Symbol) -> Option<Expr> {
    if !matches!(f.node(), Node::Add(..)) {
        return None;
    }
    Some(add_all(terms(f).into_iter().map(|t| Expr::integral(t, x))))
}

/// Whether `e` is a nonnegative integer, returned as `u32`.
pub fn small_nonneg(e: &Expr) -> Option<u32> {
    let n = e.as_integer()?;
    if n.is_negative() {
        return None;
    }
    n.to_u32()
}
