//! Canonical smart constructors.
//!
//! Each constructor assumes canonical children and returns a canonical tree.
//! The rewrites applied here are the trivial ones: identities, exact
//! rational folding, collection of like terms and like powers, integer
//! powers of products, and a handful of exact special values. Sums and
//! products are kept as right-nested binary chains in canonical order.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{Constant, Expr, Func, Node};

const MAX_POW_EXPONENT: u32 = 256;
const MAX_POW_BITS: u64 = 4096;
const MAX_ROOT_DEGREE: u32 = 16;

/// Rebuild `e` bottom-up through the smart constructors.
pub fn canonicalize(e: &Expr) -> Expr {
    match e.node() {
        Node::Integer(_) | Node::Symbol(_) | Node::Constant(_) => e.clone(),
        Node::Rational(r) => Expr::number(r.clone()),
        Node::Add(a, b) => add(canonicalize(a), canonicalize(b)),
        Node::Mul(a, b) => mul(canonicalize(a), canonicalize(b)),
        Node::Pow(a, b) => pow(canonicalize(a), canonicalize(b)),
        Node::Func(f, a) => func(*f, canonicalize(a)),
        Node::Integral(a, v) => Expr::integral(canonicalize(a), *v),
    }
}

pub fn num(n: i64) -> Expr {
    Expr::int(n)
}

pub fn rat(r: BigRational) -> Expr {
    Expr::number(r)
}

pub fn add(a: Expr, b: Expr) -> Expr {
    add_all([a, b])
}

pub fn sub(a: Expr, b: Expr) -> Expr {
    add(a, neg(b))
}

pub fn neg(a: Expr) -> Expr {
    mul(num(-1), a)
}

pub fn mul(a: Expr, b: Expr) -> Expr {
    mul_all([a, b])
}

pub fn div(a: Expr, b: Expr) -> Expr {
    mul(a, recip(b))
}

pub fn recip(a: Expr) -> Expr {
    pow(a, num(-1))
}

pub fn sqrt(a: Expr) -> Expr {
    pow(a, Expr::rational(1, 2))
}

pub fn square(a: Expr) -> Expr {
    pow(a, num(2))
}

pub fn func(f: Func, a: Expr) -> Expr {
    if let Some(v) = special_value(f, &a) {
        return v;
    }
    if let Node::Func(g, inner) = a.node() {
        if f.right_inverse_of() == Some(*g) {
            return inner.clone();
        }
    }
    if f == Func::Exp {
        // exp(c*log(z)) = z^c by definition of the principal power.
        if let Node::Mul(c, rest) = a.node() {
            if c.is_number() {
                if let Some(z) = rest.func_arg(Func::Log) {
                    return pow(z.clone(), c.clone());
                }
            }
        }
    }
    Expr::raw_func(f, a)
}

fn special_value(f: Func, a: &Expr) -> Option<Expr> {
    use Func::*;
    if a.is_zero() {
        return match f {
            Sin | Tan | Sinh | Tanh | Asin | Atan | Asinh | Atanh | Erf | Si => Some(num(0)),
            Cos | Cosh | Exp => Some(num(1)),
            _ => None,
        };
    }
    if a.is_one() {
        return match f {
            Log | Acos | Acosh => Some(num(0)),
            Exp => Some(Expr::constant(Constant::E)),
            _ => None,
        };
    }
    if f == Log && matches!(a.node(), Node::Constant(Constant::E)) {
        return Some(num(1));
    }
    None
}

fn flatten_add(e: &Expr, out: &mut Vec<Expr>) {
    match e.node() {
        Node::Add(a, b) => {
            flatten_add(a, out);
            flatten_add(b, out);
        }
        _ => out.push(e.clone()),
    }
}

fn flatten_mul(e: &Expr, out: &mut Vec<Expr>) {
    match e.node() {
        Node::Mul(a, b) => {
            flatten_mul(a, out);
            flatten_mul(b, out);
        }
        _ => out.push(e.clone()),
    }
}

/// Terms of a canonical sum (a single term if `e` is not a sum).
pub fn terms(e: &Expr) -> Vec<Expr> {
    let mut out = Vec::new();
    flatten_add(e, &mut out);
    out
}

/// Factors of a canonical product (a single factor if `e` is not a product).
pub fn factors(e: &Expr) -> Vec<Expr> {
    let mut out = Vec::new();
    flatten_mul(e, &mut out);
    out
}

/// Split a canonical term into its rational coefficient and the rest.
pub fn split_coeff(e: &Expr) -> (BigRational, Expr) {
    if let Some(r) = e.as_rational() {
        return (r, num(1));
    }
    if let Node::Mul(c, rest) = e.node() {
        if let Some(r) = c.as_rational() {
            return (r, rest.clone());
        }
    }
    (BigRational::one(), e.clone())
}

fn build_chain(mut items: Vec<Expr>, make: fn(Expr, Expr) -> Expr) -> Expr {
    let mut acc = items.pop().unwrap();
    while let Some(prev) = items.pop() {
        acc = make(prev, acc);
    }
    acc
}

fn with_coeff(c: BigRational, rest: Expr) -> Expr {
    if c.is_one() {
        rest
    } else if rest.is_one() {
        rat(c)
    } else {
        Expr::raw_mul(rat(c), rest)
    }
}

pub fn add_all<I: IntoIterator<Item = Expr>>(items: I) -> Expr {
    let mut flat = Vec::new();
    for it in items {
        flatten_add(&it, &mut flat);
    }
    let mut constant = BigRational::zero();
    let mut order: Vec<Expr> = Vec::new();
    let mut coeffs: HashMap<Expr, BigRational> = HashMap::new();
    for t in flat {
        if let Some(r) = t.as_rational() {
            constant += r;
            continue;
        }
        let (c, rest) = split_coeff(&t);
        match coeffs.get_mut(&rest) {
            Some(acc) => *acc += c,
            None => {
                order.push(rest.clone());
                coeffs.insert(rest, c);
            }
        }
    }
    let mut out: Vec<Expr> = order
        .into_iter()
        .filter_map(|rest| {
            let c = coeffs.remove(&rest).unwrap();
            (!c.is_zero()).then(|| with_coeff(c, rest))
        })
        .collect();
    if !constant.is_zero() {
        out.push(rat(constant));
    }
    if out.is_empty() {
        return num(0);
    }
    out.sort();
    build_chain(out, Expr::raw_add)
}

/// View a factor as base^exponent; `exp(a)` is `e^a`.
fn base_exp(e: &Expr) -> (Expr, Expr) {
    match e.node() {
        Node::Pow(b, x) => (b.clone(), x.clone()),
        Node::Func(Func::Exp, a) => (Expr::constant(Constant::E), a.clone()),
        _ => (e.clone(), num(1)),
    }
}

pub fn mul_all<I: IntoIterator<Item = Expr>>(items: I) -> Expr {
    let mut flat = Vec::new();
    for it in items {
        flatten_mul(&it, &mut flat);
    }
    let mut coeff = BigRational::one();
    let mut rest: Vec<Expr>;
    let mut rounds = 0;
    loop {
        rounds += 1;
        let mut order: Vec<Expr> = Vec::new();
        let mut exps: HashMap<Expr, Vec<Expr>> = HashMap::new();
        for f in flat.drain(..) {
            if let Some(r) = f.as_rational() {
                coeff *= r;
                continue;
            }
            let (b, x) = base_exp(&f);
            match exps.get_mut(&b) {
                Some(v) => v.push(x),
                None => {
                    order.push(b.clone());
                    exps.insert(b, vec![x]);
                }
            }
        }
        if coeff.is_zero() {
            return num(0);
        }
        let mut changed = false;
        rest = Vec::new();
        for b in order {
            let xs = exps.remove(&b).unwrap();
            let merged = xs.len() > 1;
            let x = add_all(xs);
            let p = if matches!(b.node(), Node::Constant(Constant::E)) && !x.is_one() {
                func(Func::Exp, x)
            } else {
                pow(b, x)
            };
            if merged || p.is_number() || matches!(p.node(), Node::Mul(..)) {
                changed = true;
            }
            flatten_mul(&p, &mut rest);
        }
        if !changed || rounds >= 8 {
            break;
        }
        flat = rest;
    }
    let rest: Vec<Expr> = rest
        .into_iter()
        .filter_map(|f| match f.as_rational() {
            Some(r) => {
                coeff *= r;
                None
            }
            None => Some(f),
        })
        .collect();
    if coeff.is_zero() {
        return num(0);
    }
    if rest.is_empty() {
        return rat(coeff);
    }
    // c*(a + b) distributes when the sum is the only other factor.
    if !coeff.is_one() && rest.len() == 1 && matches!(rest[0].node(), Node::Add(..)) {
        let c = coeff;
        return add_all(terms(&rest[0]).into_iter().map(|t| mul(rat(c.clone()), t)));
    }
    let mut rest = rest;
    rest.sort();
    let body = build_chain(rest, Expr::raw_mul);
    with_coeff(coeff, body)
}

pub fn pow(b: Expr, x: Expr) -> Expr {
    if x.is_zero() {
        return num(1);
    }
    if x.is_one() {
        return b;
    }
    if b.is_one() {
        return num(1);
    }
    if let (Some(rb), Some(rx)) = (b.as_rational(), x.as_rational()) {
        if let Some(v) = fold_numeric_pow(&rb, &rx) {
            return v;
        }
        return Expr::raw_pow(b, x);
    }
    match b.node() {
        Node::Constant(Constant::E) => return func(Func::Exp, x),
        Node::Constant(Constant::I) => {
            if let Some(n) = x.as_integer() {
                let k = n.mod_floor(&BigInt::from(4)).to_u8().unwrap();
                return match k {
                    0 => num(1),
                    1 => b,
                    2 => num(-1),
                    _ => neg(b),
                };
            }
        }
        _ => {}
    }
    if x.as_integer().is_some() {
        match b.node() {
            Node::Pow(bb, be) => return pow(bb.clone(), mul(be.clone(), x)),
            Node::Func(Func::Exp, a) => return func(Func::Exp, mul(x, a.clone())),
            Node::Mul(..) => {
                return mul_all(factors(&b).into_iter().map(|f| pow(f, x.clone())));
            }
            _ => {}
        }
    }
    Expr::raw_pow(b, x)
}

fn fold_numeric_pow(b: &BigRational, x: &BigRational) -> Option<Expr> {
    if b.is_zero() {
        return x.is_positive().then(|| num(0));
    }
    if x.is_integer() {
        let n = x.to_integer().to_i64()?;
        let m = n.unsigned_abs();
        if m > MAX_POW_EXPONENT as u64 {
            return None;
        }
        let bits = b.numer().bits() + b.denom().bits();
        if bits.saturating_mul(m) > MAX_POW_BITS {
            return None;
        }
        let p = num_traits::pow(b.clone(), m as usize);
        return Some(rat(if n < 0 { p.recip() } else { p }));
    }
    // Exact roots of positive rationals: (p/q)^(a/k) with p, q perfect k-th powers.
    if !b.is_positive() {
        return None;
    }
    let k = x.denom().to_u32()?;
    if k > MAX_ROOT_DEGREE {
        return None;
    }
    let rn = exact_root(b.numer(), k)?;
    let rd = exact_root(b.denom(), k)?;
    let base = BigRational::new(rn, rd);
    fold_numeric_pow(&base, &BigRational::from_integer(x.numer().clone()))
}

fn exact_root(n: &BigInt, k: u32) -> Option<BigInt> {
    let r = n.nth_root(k);
    (num_traits::pow(r.clone(), k as usize) == *n).then_some(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Symbol;

    fn x() -> Expr {
        Expr::x()
    }

    #[test]
    fn folds_additive_identities_and_constants() {
        // x + 1 + 0 + 3 -> x + 4
        let raw = Expr::raw_add(
            Expr::raw_add(Expr::raw_add(x(), num(1)), num(0)),
            num(3),
        );
        let c = canonicalize(&raw);
        assert_eq!(c, Expr::raw_add(num(4), x()));
    }

    #[test]
    fn collects_like_terms() {
        let raw = Expr::raw_add(x(), Expr::raw_mul(num(2), x()));
        assert_eq!(canonicalize(&raw), Expr::raw_mul(num(3), x()));
        assert_eq!(sub(x(), x()), num(0));
    }

    #[test]
    fn collects_powers_and_cancels() {
        assert_eq!(mul(x(), x()), square(x()));
        assert_eq!(mul(x(), recip(x())), num(1));
        let s = func(Func::Sin, x());
        assert_eq!(div(mul(num(2), s.clone()), mul(num(2), s)), num(1));
    }

    #[test]
    fn division_normal_form_matches_half_times() {
        let a = canonicalize(&Expr::raw_mul(x(), Expr::rational(1, 2)));
        let b = div(x(), num(2));
        assert_eq!(a, b);
    }

    #[test]
    fn numeric_powers_fold_exactly() {
        assert_eq!(pow(num(2), num(10)), num(1024));
        assert_eq!(pow(num(4), Expr::rational(1, 2)), num(2));
        assert_eq!(pow(Expr::rational(8, 27), Expr::rational(-2, 3)), Expr::rational(9, 4));
        assert!(matches!(pow(num(2), Expr::rational(1, 2)).node(), Node::Pow(..)));
        assert!(matches!(pow(num(0), num(-1)).node(), Node::Pow(..)));
        assert!(matches!(pow(num(10), num(100000)).node(), Node::Pow(..)));
    }

    #[test]
    fn exp_and_log_interplay() {
        let l = func(Func::Log, x());
        assert_eq!(func(Func::Exp, l.clone()), x());
        assert_eq!(func(Func::Exp, mul(num(2), l)), square(x()));
        let ey = func(Func::Exp, Expr::symbol(Symbol::Y));
        assert_eq!(
            mul(ey.clone(), ey),
            func(Func::Exp, mul(num(2), Expr::symbol(Symbol::Y)))
        );
        assert_eq!(pow(Expr::constant(Constant::E), x()), func(Func::Exp, x()));
    }

    #[test]
    fn numeric_coefficient_distributes_over_single_sum() {
        let s = add(x(), num(1));
        assert_eq!(mul(num(2), s), add(mul(num(2), x()), num(2)));
    }

    #[test]
    fn imaginary_unit_powers() {
        let i = Expr::constant(Constant::I);
        assert_eq!(mul(i.clone(), i.clone()), num(-1));
        assert_eq!(pow(i.clone(), num(3)), neg(i));
    }

    #[test]
    fn special_values() {
        assert_eq!(func(Func::Sin, num(0)), num(0));
        assert_eq!(func(Func::Log, num(1)), num(0));
        assert_eq!(func(Func::Exp, num(0)), num(1));
        assert_eq!(func(Func::Log, Expr::constant(Constant::E)), num(1));
        assert_eq!(func(Func::Sin, func(Func::Asin, x())), x());
        assert!(matches!(func(Func::Asin, func(Func::Sin, x())).node(), Node::Func(..)));
    }
}
