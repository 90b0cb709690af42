//! Rewrite rules. Function rewrites replace a single function (or power)
//! node; integrand rewrites replace `∫F dx` by `∫F' dx` with `F' = F`.

use crate::expr::canon::{add, div, factors, func, mul, mul_all, num, pow, square, sub};
use crate::expr::{Expr, Func, Node, Symbol};
use crate::poly::{
    coefficients, expand, fractions_to_expr, partial_fractions, quotient_to_expr, rational_function,
    reduce,
};

use super::Action;

/// Largest integer multiple expanded by TrigExpandRule.
pub const MAX_TRIG_MULTIPLE: i64 = 8;

/// Rewrite of a function node `g` (or a power of cosine for Cos1Rule).
pub fn rewrite_function(action: Action, g: &Expr) -> Option<Expr> {
    use Action::*;
    let q = |f: Func, a: &Expr, h: Func| div(func(f, a.clone()), func(h, a.clone()));
    match (action, g.node()) {
        (Tan1, Node::Func(Func::Tan, a)) => Some(q(Func::Sin, a, Func::Cos)),
        (Cot1, Node::Func(Func::Cot, a)) => Some(q(Func::Cos, a, Func::Sin)),
        (Tanh1, Node::Func(Func::Tanh, a)) => Some(q(Func::Sinh, a, Func::Cosh)),
        (Coth1, Node::Func(Func::Coth, a)) => Some(q(Func::Cosh, a, Func::Sinh)),
        (Cos1, Node::Pow(b, k)) => {
            let a = b.func_arg(Func::Cos)?;
            let n = k.as_i64()?;
            (n < 0).then(|| pow(func(Func::Sec, a.clone()), num(-n)))
        }
        (Sec1, Node::Func(Func::Sec, a)) => {
            let (s, t) = (func(Func::Sec, a.clone()), func(Func::Tan, a.clone()));
            Some(div(
                add(square(s.clone()), mul(s.clone(), t.clone())),
                add(s, t),
            ))
        }
        (Csc1, Node::Func(Func::Csc, a)) => {
            let (s, t) = (func(Func::Csc, a.clone()), func(Func::Cot, a.clone()));
            Some(div(
                add(square(s.clone()), mul(s.clone(), t.clone())),
                add(s, t),
            ))
        }
        (Sech1, Node::Func(Func::Sech, a)) => Some(div(
            func(Func::Cosh, a.clone()),
            add(square(func(Func::Sinh, a.clone())), num(1)),
        )),
        (Csch1, Node::Func(Func::Csch, a)) => Some(div(
            func(Func::Sinh, a.clone()),
            sub(square(func(Func::Cosh, a.clone())), num(1)),
        )),
        (TrigExpand, Node::Func(f @ (Func::Sin | Func::Cos), a)) => {
            let r = trig_expand(*f, a, 0)?;
            (r != *g).then_some(r)
        }
        _ => None,
    }
}

/// sin/cos of a sum or of an integer multiple, expanded fully.
fn trig_expand(f: Func, a: &Expr, depth: usize) -> Option<Expr> {
    if depth > 16 {
        return None;
    }
    let leaf = |f: Func, a: &Expr, d: usize| trig_expand(f, a, d + 1).unwrap_or_else(|| func(f, a.clone()));
    if let Node::Add(p, rest) = a.node() {
        let (sp, cp) = (leaf(Func::Sin, p, depth), leaf(Func::Cos, p, depth));
        let (sr, cr) = (leaf(Func::Sin, rest, depth), leaf(Func::Cos, rest, depth));
        return Some(match f {
            Func::Sin => add(mul(sp, cr), mul(cp, sr)),
            _ => sub(mul(cp, cr), mul(sp, sr)),
        });
    }
    if let Node::Mul(c, rest) = a.node() {
        let n = c.as_i64()?;
        if !(2..=MAX_TRIG_MULTIPLE).contains(&n) {
            return None;
        }
        let m = mul(num(n - 1), rest.clone());
        let (sm, cm) = (leaf(Func::Sin, &m, depth), leaf(Func::Cos, &m, depth));
        let (s1, c1) = (leaf(Func::Sin, rest, depth), leaf(Func::Cos, rest, depth));
        return Some(match f {
            Func::Sin => add(mul(sm, c1), mul(cm, s1)),
            _ => sub(mul(cm, c1), mul(sm, s1)),
        });
    }
    None
}

/// `c * p(a x)^m * q(b x)^n` with `p`, `q` the given pair of functions.
struct TrigProduct {
    coeff: Expr,
    m: i64,
    a: Expr,
    n: i64,
    b: Expr,
}

fn linear_arg(arg: &Expr, x: Symbol) -> Option<Expr> {
    let c = coefficients(arg, x, 1)?;
    (c[0].is_zero() && !c[1].is_zero()).then(|| c[1].clone())
}

fn trig_product(f: &Expr, x: Symbol, p: Func, q: Func) -> Option<TrigProduct> {
    let mut coeff = Vec::new();
    let mut m = None;
    let mut n = None;
    for fac in factors(f) {
        if fac.is_free_of(x) && !fac.has_integral() {
            coeff.push(fac);
            continue;
        }
        let (base, k) = match fac.node() {
            Node::Pow(b, k) => (b.clone(), k.as_i64()?),
            _ => (fac.clone(), 1),
        };
        let Node::Func(g, arg) = base.node() else { return None };
        let slot = if *g == p {
            &mut m
        } else if *g == q {
            &mut n
        } else {
            return None;
        };
        if slot.is_some() {
            return None;
        }
        *slot = Some((k, linear_arg(arg, x)?));
    }
    if m.is_none() && n.is_none() {
        return None;
    }
    let (m, a) = m.map_or((0, None), |(k, a)| (k, Some(a)));
    let (n, b) = n.map_or((0, None), |(k, b)| (k, Some(b)));
    let a = a.clone().or_else(|| b.clone())?;
    let b = b.unwrap_or_else(|| a.clone());
    Some(TrigProduct {
        coeff: mul_all(coeff),
        m,
        a,
        n,
        b,
    })
}

/// Rewrite of an integrand by one of the trigonometric power rules.
pub fn rewrite_integrand(action: Action, f: &Expr, x: Symbol) -> Option<Expr> {
    use Action::*;
    let xv = Expr::symbol(x);
    let at = |g: Func, k: &Expr| func(g, mul(k.clone(), xv.clone()));
    let r = match action {
        SinCosEven => {
            let t = trig_product(f, x, Func::Sin, Func::Cos)?;
            if t.m < 0 || t.n < 0 || t.m % 2 != 0 || t.n % 2 != 0 {
                return None;
            }
            let two_a = mul(num(2), t.a.clone());
            let two_b = mul(num(2), t.b.clone());
            mul_all([
                t.coeff,
                pow(
                    div(sub(num(1), at(Func::Cos, &two_a)), num(2)),
                    num(t.m / 2),
                ),
                pow(
                    div(add(num(1), at(Func::Cos, &two_b)), num(2)),
                    num(t.n / 2),
                ),
            ])
        }
        SinOddCos => {
            let t = trig_product(f, x, Func::Sin, Func::Cos)?;
            if t.m < 3 || t.m % 2 == 0 {
                return None;
            }
            mul_all([
                t.coeff,
                pow(sub(num(1), square(at(Func::Cos, &t.a))), num((t.m - 1) / 2)),
                at(Func::Sin, &t.a),
                pow(at(Func::Cos, &t.b), num(t.n)),
            ])
        }
        CosOddSin => {
            let t = trig_product(f, x, Func::Sin, Func::Cos)?;
            if t.n < 3 || t.n % 2 == 0 {
                return None;
            }
            mul_all([
                t.coeff,
                pow(sub(num(1), square(at(Func::Sin, &t.b))), num((t.n - 1) / 2)),
                at(Func::Cos, &t.b),
                pow(at(Func::Sin, &t.a), num(t.m)),
            ])
        }
        SecEvenTan => {
            let t = trig_product(f, x, Func::Sec, Func::Tan)?;
            if t.m < 4 || t.m % 2 != 0 || t.n < 0 {
                return None;
            }
            // here m counts sec and n counts tan
            mul_all([
                t.coeff,
                pow(add(num(1), square(at(Func::Tan, &t.a))), num(t.m / 2 - 1)),
                square(at(Func::Sec, &t.a)),
                pow(at(Func::Tan, &t.b), num(t.n)),
            ])
        }
        TanOddSec => {
            let t = trig_product(f, x, Func::Tan, Func::Sec)?;
            if t.m < 1 || t.m % 2 == 0 {
                return None;
            }
            mul_all([
                t.coeff,
                pow(sub(square(at(Func::Sec, &t.a)), num(1)), num((t.m - 1) / 2)),
                at(Func::Tan, &t.a),
                pow(at(Func::Sec, &t.b), num(t.n)),
            ])
        }
        Tan2 => {
            let t = trig_product(f, x, Func::Tan, Func::Tan)?;
            if t.m != 2 || t.n != 0 {
                return None;
            }
            mul(t.coeff, sub(square(at(Func::Sec, &t.a)), num(1)))
        }
        CotCscEven => {
            let t = trig_product(f, x, Func::Csc, Func::Cot)?;
            if t.m < 4 || t.m % 2 != 0 || t.n < 0 {
                return None;
            }
            mul_all([
                t.coeff,
                pow(add(num(1), square(at(Func::Cot, &t.a))), num(t.m / 2 - 1)),
                square(at(Func::Csc, &t.a)),
                pow(at(Func::Cot, &t.b), num(t.n)),
            ])
        }
        CotOddCsc => {
            let t = trig_product(f, x, Func::Cot, Func::Csc)?;
            if t.m < 1 || t.m % 2 == 0 {
                return None;
            }
            mul_all([
                t.coeff,
                pow(sub(square(at(Func::Csc, &t.a)), num(1)), num((t.m - 1) / 2)),
                at(Func::Cot, &t.a),
                pow(at(Func::Csc, &t.b), num(t.n)),
            ])
        }
        PartialFractions => {
            let (n, d) = rational_function(f, x)?;
            if d.degree() == 0 {
                return None;
            }
            let (quo, fr) = partial_fractions(&n, &d)?;
            fractions_to_expr(&quo, &fr, x)
        }
        Cancel => {
            let (n, d) = rational_function(f, x)?;
            let (n, d) = reduce(n, d);
            quotient_to_expr(&n, &d, x)
        }
        Expand => expand(f)?,
        _ => return None,
    };
    (r != *f).then_some(r)
}
