//! Integration by parts and the small closed-form integrator it relies on.

use crate::expr::canon::{add_all, div, factors, mul, mul_all, sub, terms};
use crate::expr::diff::differentiate;
use crate::expr::subst::substitute_canonical;
use crate::expr::{Expr, Func, Node, Symbol};
use crate::poly::affine;

use super::table::{antiderivative, split_constant};
use super::Action;

/// Recursion cap of [`integrate_simple`].
pub const MAX_SIMPLE_DEPTH: usize = 3;

/// Closed-form antiderivative using only table rules, linearity and affine
/// changes of variable. Returns `None` when that is not enough.
pub fn integrate_simple(f: &Expr, x: Symbol) -> Option<Expr> {
    simple(f, x, 0)
}

fn simple(f: &Expr, x: Symbol, depth: usize) -> Option<Expr> {
    if depth > MAX_SIMPLE_DEPTH || f.has_integral() {
        return None;
    }
    for a in Action::ALL.into_iter().filter(|a| a.is_table()) {
        if let Some(r) = antiderivative(a, f, x) {
            return Some(r);
        }
    }
    if matches!(f.node(), Node::Add(..)) {
        let parts: Option<Vec<Expr>> = terms(f).iter().map(|t| simple(t, x, depth + 1)).collect();
        return parts.map(add_all);
    }
    let (c, rest) = split_constant(f, x);
    if !c.is_one() {
        return simple(&rest, x, depth + 1).map(|r| mul(c, r));
    }
    // g(a x + b) with a single affine argument.
    let arg = affine_argument(f, x)?;
    let (a, _) = affine(&arg, x)?;
    let t = fresh_var(f, x)?;
    let tv = Expr::symbol(t);
    let g = substitute_canonical(f, &arg, &tv);
    if g.has_symbol(x) {
        return None;
    }
    let r = simple(&g, t, depth + 1)?;
    Some(div(substitute_canonical(&r, &tv, &arg), a))
}

fn fresh_var(f: &Expr, x: Symbol) -> Option<Symbol> {
    let used = f.symbols();
    Symbol::ALL
        .into_iter()
        .rev()
        .find(|s| *s != x && !used.contains(s))
}

/// The unique non-trivial affine expression in `x` that every occurrence of
/// `x` in `f` sits inside, if there is one.
fn affine_argument(f: &Expr, x: Symbol) -> Option<Expr> {
    let mut found: Option<Expr> = None;
    let mut ok = true;
    f.walk(&mut |e| {
        let arg = match e.node() {
            Node::Func(_, a) => a,
            Node::Pow(b, _) => b,
            _ => return,
        };
        if !arg.has_symbol(x) || arg.as_symbol() == Some(x) {
            return;
        }
        if affine(arg, x).is_some() {
            match &found {
                None => found = Some(arg.clone()),
                Some(g) if g == arg => {}
                Some(_) => ok = false,
            }
        }
    });
    let arg = found.filter(|_| ok)?;
    Some(arg)
}

/// `u * V - ∫ u' V dx` with `V = ∫ dv dx` in closed form.
pub fn parts(f: &Expr, x: Symbol, u: &Expr, dv: &Expr) -> Option<Expr> {
    if !u.has_symbol(x) || u.has_integral() || dv.has_integral() {
        return None;
    }
    if mul(u.clone(), dv.clone()) != *f {
        return None;
    }
    let v = integrate_simple(dv, x)?;
    let du = differentiate(u, x).ok()?;
    let rest = mul(du, v.clone());
    let uv = mul(u.clone(), v);
    Some(if rest.is_zero() {
        uv
    } else {
        sub(uv, Expr::integral(rest, x))
    })
}

/// Rank of a `u` candidate: logarithms, inverse functions, algebraic,
/// trigonometric, exponential.
fn liate(u: &Expr) -> u8 {
    use Func::*;
    let rank_of = |f: &Func| match f {
        Log => 0,
        Asin | Acos | Atan | Acot | Asec | Acsc | Asinh | Acosh | Atanh | Acoth | Asech
        | Acsch => 1,
        Sin | Cos | Tan | Cot | Sec | Csc | Sinh | Cosh | Tanh | Coth | Sech | Csch => 3,
        Exp => 4,
        Erf | Ei | Ci | Si => 5,
    };
    factors(u)
        .iter()
        .map(|fac| {
            let base = match fac.node() {
                Node::Pow(b, _) => b,
                _ => fac,
            };
            match base.node() {
                Node::Func(f, _) => rank_of(f),
                _ => 2,
            }
        })
        .min()
        .unwrap_or(2)
}

/// Splits `F = u * dv` worth trying, best first: every subset of the
/// factors depending on `x` as `u`, the constant always kept in `dv`.
pub fn pairings(f: &Expr, x: Symbol) -> Vec<(Expr, Expr)> {
    let (c, rest) = split_constant(f, x);
    let fs = factors(&rest);
    if fs.len() > 5 || rest.is_one() {
        return Vec::new();
    }
    let mut out: Vec<(u8, usize, Expr, Expr)> = Vec::new();
    for mask in 1u32..(1 << fs.len()) {
        let (mut us, mut dvs) = (Vec::new(), vec![c.clone()]);
        for (i, fac) in fs.iter().enumerate() {
            if mask & (1 << i) != 0 {
                us.push(fac.clone());
            } else {
                dvs.push(fac.clone());
            }
        }
        let u = mul_all(us);
        let dv = mul_all(dvs);
        out.push((liate(&u), out.len(), u, dv));
    }
    out.sort_by_key(|(r, i, _, _)| (*r, *i));
    out.into_iter().map(|(_, _, u, dv)| (u, dv)).collect()
}
