//! Change of variables.

use std::collections::BTreeSet;

use crate::expr::canon::{add_all, div, factors, func, mul_all, pow, recip, sub, terms};
use crate::expr::diff::differentiate;
use crate::expr::subst::substitute_canonical;
use crate::expr::{Expr, Func, Node, Symbol};

/// Substitution symbols, in the order they are handed out.
pub const FRESH_SYMBOLS: [Symbol; 6] = [
    Symbol::Y,
    Symbol::Z,
    Symbol::U,
    Symbol::V,
    Symbol::W,
    Symbol::T,
];

/// Largest number of substitution candidates proposed per integral.
pub const MAX_U_CANDIDATES: usize = 8;

/// First symbol of [`FRESH_SYMBOLS`] outside `used`.
pub fn fresh_symbol(used: &BTreeSet<Symbol>) -> Option<Symbol> {
    FRESH_SYMBOLS.into_iter().find(|s| !used.contains(s))
}

/// Outcome of a successful change of variables.
pub struct USub {
    pub integral: Expr,
    /// Whether `x` had to be eliminated by inverting the substitution.
    pub inverted: bool,
}

/// `∫F dx` with `y = sub(x)`: divide by `sub'`, replace `sub` by `y`, and
/// eliminate what is left of `x` through `x = sub^{-1}(y)`.
pub fn u_substitute(f: &Expr, x: Symbol, y: Symbol, sub_expr: &Expr) -> Option<USub> {
    if sub_expr.is_free_of(x) || sub_expr.as_symbol() == Some(x) || sub_expr.has_integral() {
        return None;
    }
    let dy = differentiate(sub_expr, x).ok()?;
    if dy.is_zero() {
        return None;
    }
    let yv = Expr::symbol(y);
    let g = div(f.clone(), dy);
    let mut h = substitute_canonical(&g, sub_expr, &yv);
    let mut inverted = false;
    if h.has_symbol(x) {
        let xs = invert(sub_expr, x, yv)?;
        h = substitute_canonical(&h, &Expr::symbol(x), &xs);
        inverted = true;
    }
    if h.has_symbol(x) {
        return None;
    }
    Some(USub {
        integral: Expr::integral(h, y),
        inverted,
    })
}

/// Solve `e(x) = y` for `x` along a single chain of invertible steps.
pub fn invert(e: &Expr, x: Symbol, y: Expr) -> Option<Expr> {
    if e.as_symbol() == Some(x) {
        return Some(y);
    }
    match e.node() {
        Node::Add(..) => {
            let (dep, rest): (Vec<Expr>, Vec<Expr>) =
                terms(e).into_iter().partition(|t| t.has_symbol(x));
            if dep.len() != 1 {
                return None;
            }
            invert(&dep[0], x, sub(y, add_all(rest)))
        }
        Node::Mul(..) => {
            let (dep, rest): (Vec<Expr>, Vec<Expr>) =
                factors(e).into_iter().partition(|t| t.has_symbol(x));
            if dep.len() != 1 {
                return None;
            }
            invert(&dep[0], x, div(y, mul_all(rest)))
        }
        Node::Pow(b, k) => {
            if !k.has_symbol(x) {
                let r = k.as_rational()?;
                invert(b, x, pow(y, Expr::number(num_traits::Inv::inv(r))))
            } else if !b.has_symbol(x) {
                invert(k, x, div(func(Func::Log, y), func(Func::Log, b.clone())))
            } else {
                None
            }
        }
        Node::Func(f, a) => {
            use Func::*;
            let inv = match f {
                Exp => Log,
                Log => Exp,
                Sin => Asin,
                Cos => Acos,
                Tan => Atan,
                Sinh => Asinh,
                Cosh => Acosh,
                Tanh => Atanh,
                Asin => Sin,
                Acos => Cos,
                Atan => Tan,
                Asinh => Sinh,
                Acosh => Cosh,
                Atanh => Tanh,
                _ => return None,
            };
            invert(a, x, func(inv, y))
        }
        _ => None,
    }
}

/// Substitution candidates for `∫F dx`: function nodes, their arguments,
/// bases of powers and non-integer powers themselves, largest first.
pub fn candidates(f: &Expr, x: Symbol) -> Vec<Expr> {
    let mut found: Vec<Expr> = Vec::new();
    let mut push = |e: &Expr| {
        if e.has_symbol(x) && e.as_symbol() != Some(x) && !e.has_integral() && !found.contains(e) {
            found.push(e.clone());
        }
    };
    f.walk(&mut |e| match e.node() {
        Node::Func(_, a) => {
            push(e);
            push(a);
        }
        Node::Pow(b, k) => {
            push(b);
            if k.as_integer().is_none() {
                push(e);
            }
        }
        _ => {}
    });
    // The integrand itself is never a useful substitution.
    found.retain(|e| e != f && *e != recip(f.clone()));
    found.sort_by_key(|e| std::cmp::Reverse(e.size()));
    found.truncate(MAX_U_CANDIDATES);
    found
}

/// Whether `e` contains a trigonometric or hyperbolic function applied to
/// something involving an inverse of the same family, or `log(exp(..))`:
/// the shapes left behind by an inverted substitution that does not
/// simplify.
pub fn has_unsimplified_inverse(e: &Expr) -> bool {
    use Func::*;
    let trig = [Sin, Cos, Tan, Cot, Sec, Csc];
    let atrig = [Asin, Acos, Atan, Acot, Asec, Acsc];
    let hyp = [Sinh, Cosh, Tanh, Coth, Sech, Csch];
    let ahyp = [Asinh, Acosh, Atanh, Acoth, Asech, Acsch];
    let inside = |a: &Expr, fam: &[Func]| {
        a.any(&mut |n| matches!(n.node(), Node::Func(g, _) if fam.contains(g)))
    };
    e.any(&mut |n| {
        let Node::Func(f, a) = n.node() else { return false };
        (trig.contains(f) && inside(a, &atrig))
            || (atrig.contains(f) && inside(a, &trig))
            || (hyp.contains(f) && inside(a, &ahyp))
            || (ahyp.contains(f) && inside(a, &hyp))
            || (*f == Log && a.func_arg(Exp).is_some())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::canon::{add, mul, num, recip, sqrt, square};

    fn x() -> Expr {
        Expr::x()
    }

    #[test]
    fn sine_substitution_under_square_root() {
        let s = func(Func::Sin, mul(num(2), x()));
        let f = mul_all([
            num(2),
            func(Func::Cos, mul(num(2), x())),
            recip(sqrt(add(square(s.clone()), num(1)))),
        ]);
        let r = u_substitute(&f, Symbol::X, Symbol::U, &s).unwrap();
        let u = Expr::symbol(Symbol::U);
        assert_eq!(r.integral, Expr::integral(recip(sqrt(add(square(u), num(1)))), Symbol::U));
        assert!(!r.inverted);
    }

    #[test]
    fn square_substitution_under_exponential() {
        let f = div(func(Func::Exp, square(x())), x());
        let r = u_substitute(&f, Symbol::X, Symbol::U, &square(x())).unwrap();
        let u = Expr::symbol(Symbol::U);
        assert_eq!(r.integral, Expr::integral(div(func(Func::Exp, u.clone()), mul(num(2), u)), Symbol::U));
    }

    #[test]
    fn log_substitution_is_inverted() {
        // x (4x + log x - 2) with y = log x -> e^{2y} (4 e^y + y - 2)
        let l = func(Func::Log, x());
        let f = mul(x(), add_all([mul(num(4), x()), l.clone(), num(-2)]));
        let r = u_substitute(&f, Symbol::X, Symbol::Y, &l).unwrap();
        let y = Expr::symbol(Symbol::Y);
        let ey = func(Func::Exp, y.clone());
        let expected = mul(
            func(Func::Exp, mul(num(2), y.clone())),
            add_all([mul(num(4), ey), y, num(-2)]),
        );
        assert!(r.inverted);
        let Node::Integral(body, v) = r.integral.node() else { panic!() };
        assert_eq!(*v, Symbol::Y);
        assert_eq!(crate::poly::expand(body).unwrap(), crate::poly::expand(&expected).unwrap());
    }

    #[test]
    fn inversion_chain() {
        let y = Expr::symbol(Symbol::Y);
        let e = add(mul(num(3), func(Func::Exp, x())), num(1));
        let inv = invert(&e, Symbol::X, y.clone()).unwrap();
        assert_eq!(inv, func(Func::Log, div(sub(y, num(1)), num(3))));
        assert!(invert(&func(Func::Erf, x()), Symbol::X, Expr::symbol(Symbol::Y)).is_none());
    }

    #[test]
    fn unsimplified_inverse_detection() {
        let e = func(Func::Sin, func(Func::Acos, Expr::symbol(Symbol::U)));
        assert!(has_unsimplified_inverse(&e));
        assert!(!has_unsimplified_inverse(&func(Func::Sin, x())));
        let nested = func(Func::Cos, mul(num(2), func(Func::Acos, Expr::symbol(Symbol::Y))));
        assert!(has_unsimplified_inverse(&nested));
        assert!(!has_unsimplified_inverse(&func(Func::Log, add(func(Func::Exp, x()), num(1)))));
    }
}
