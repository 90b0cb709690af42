//! Univariate polynomials with exact rational coefficients, rational
//! functions, partial fractions and algebraic expansion.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::expr::canon::{add_all, factors, func, mul, mul_all, pow, rat, recip, terms};
use crate::expr::{Expr, Node, Symbol};

/// Largest degree built while converting expressions.
pub const MAX_DEGREE: usize = 64;
/// Largest number of terms `expand` will produce.
pub const MAX_EXPAND_TERMS: usize = 256;
/// Largest integer power of a sum that `expand` multiplies out.
pub const MAX_EXPAND_POWER: i64 = 12;

/// Dense polynomial, coefficients from the constant term upward, no
/// trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    coeffs: Vec<BigRational>,
}

fn q(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

impl Poly {
    pub fn new(mut coeffs: Vec<BigRational>) -> Poly {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn zero() -> Poly {
        Poly { coeffs: Vec::new() }
    }

    pub fn constant(c: BigRational) -> Poly {
        Poly::new(vec![c])
    }

    pub fn one() -> Poly {
        Poly::constant(BigRational::one())
    }

    /// The polynomial `x`.
    pub fn var() -> Poly {
        Poly::new(vec![BigRational::zero(), BigRational::one()])
    }

    /// `x - r`.
    pub fn linear_root(r: BigRational) -> Poly {
        Poly::new(vec![-r, BigRational::one()])
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> BigRational {
        self.coeffs.get(k).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn lead(&self) -> BigRational {
        self.coeffs.last().cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let n = self.coeffs.len().max(o.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) + o.coeff(k)).collect())
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        let n = self.coeffs.len().max(o.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) - o.coeff(k)).collect())
    }

    pub fn scale(&self, c: &BigRational) -> Poly {
        Poly::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    pub fn pow(&self, n: u32) -> Poly {
        let mut acc = Poly::one();
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Quotient and remainder. Panics on division by zero.
    pub fn div_rem(&self, d: &Poly) -> (Poly, Poly) {
        assert!(!d.is_zero(), "polynomial division by zero");
        let mut r = self.coeffs.clone();
        let dd = d.degree();
        let lead = d.lead();
        if self.coeffs.len() < d.coeffs.len() {
            return (Poly::zero(), self.clone());
        }
        let mut quo = vec![BigRational::zero(); self.coeffs.len() - dd];
        for k in (0..quo.len()).rev() {
            let c = &r[k + dd] / &lead;
            if !c.is_zero() {
                for (j, b) in d.coeffs.iter().enumerate() {
                    r[k + j] -= &c * b;
                }
            }
            quo[k] = c;
        }
        r.truncate(dd);
        (Poly::new(quo), Poly::new(r))
    }

    pub fn monic(&self) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        self.scale(&self.lead().recip())
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, o: &Poly) -> Poly {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let r = a.div_rem(&b).1;
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * q(k as i64))
                .collect(),
        )
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    /// Convert from an expression that is a polynomial in `v` with rational
    /// coefficients.
    pub fn from_expr(e: &Expr, v: Symbol) -> Option<Poly> {
        let (n, d) = rational_function(e, v)?;
        if !d.is_constant() {
            return None;
        }
        Some(n.scale(&d.lead().recip()))
    }

    pub fn to_expr(&self, v: Symbol) -> Expr {
        let x = Expr::symbol(v);
        add_all(
            self.coeffs
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(k, c)| mul(rat(c.clone()), pow(x.clone(), Expr::int(k as i64)))),
        )
    }

    /// Distinct rational roots with multiplicity, for integer coefficient
    /// sizes small enough to enumerate divisors.
    pub fn rational_roots(&self) -> Vec<(BigRational, usize)> {
        let mut out = Vec::new();
        if self.degree() == 0 {
            return out;
        }
        let mut p = self.clone();
        let mut zeros = 0;
        while p.coeff(0).is_zero() && !p.is_zero() {
            p = p.div_rem(&Poly::var()).0;
            zeros += 1;
        }
        if zeros > 0 {
            out.push((BigRational::zero(), zeros));
        }
        if p.degree() == 0 {
            return out;
        }
        let ints = integer_coeffs(&p);
        let (a0, an) = (ints[0].abs(), ints.last().unwrap().abs());
        let (Some(a0), Some(an)) = (a0.to_u64(), an.to_u64()) else {
            return out;
        };
        if a0 > 1_000_000 || an > 1_000_000 {
            return out;
        }
        for num in divisors(a0) {
            for den in divisors(an) {
                for sign in [1i64, -1] {
                    let r = BigRational::new(
                        BigInt::from(num as i64 * sign),
                        BigInt::from(den as i64),
                    );
                    if out.iter().any(|(s, _)| *s == r) {
                        continue;
                    }
                    let lin = Poly::linear_root(r.clone());
                    let mut m = 0;
                    loop {
                        let (quo, rem) = p.div_rem(&lin);
                        if !rem.is_zero() {
                            break;
                        }
                        p = quo;
                        m += 1;
                    }
                    if m > 0 {
                        out.push((r, m));
                    }
                }
            }
        }
        out
    }

    /// Square-free decomposition: monic factors `f_k` with
    /// `self = lead * prod f_k^k`.
    pub fn square_free(&self) -> Vec<(Poly, usize)> {
        let mut out = Vec::new();
        if self.degree() == 0 {
            return out;
        }
        let f = self.monic();
        let fp = f.derivative();
        let a = f.gcd(&fp);
        let mut b = f.div_rem(&a).0;
        let mut c = fp.div_rem(&a).0.sub(&b.derivative());
        let mut k = 1;
        while b.degree() > 0 {
            let g = b.gcd(&c);
            if g.degree() > 0 {
                out.push((g.clone(), k));
            }
            b = b.div_rem(&g).0;
            c = c.div_rem(&g).0.sub(&b.derivative());
            k += 1;
            if k > MAX_DEGREE {
                break;
            }
        }
        out
    }
}

fn integer_coeffs(p: &Poly) -> Vec<BigInt> {
    let l = p
        .coeffs
        .iter()
        .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    p.coeffs
        .iter()
        .map(|c| (c * BigRational::from_integer(l.clone())).to_integer())
        .collect()
}

fn divisors(n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            if d * d != n {
                out.push(n / d);
            }
        }
        d += 1;
    }
    out.sort_unstable();
    out
}

/// Reduce `n/d` by the gcd and make the denominator monic.
pub fn reduce(n: Poly, d: Poly) -> (Poly, Poly) {
    let g = n.gcd(&d);
    let (mut n, mut d) = if g.degree() > 0 {
        (n.div_rem(&g).0, d.div_rem(&g).0)
    } else {
        (n, d)
    };
    let l = d.lead();
    if !l.is_one() && !l.is_zero() {
        n = n.scale(&l.recip());
        d = d.scale(&l.recip());
    }
    (n, d)
}

/// View `e` as a quotient of polynomials in `v` with rational coefficients.
pub fn rational_function(e: &Expr, v: Symbol) -> Option<(Poly, Poly)> {
    let r = match e.node() {
        Node::Integer(_) | Node::Rational(_) => (Poly::constant(e.as_rational()?), Poly::one()),
        Node::Symbol(s) if *s == v => (Poly::var(), Poly::one()),
        Node::Add(..) => {
            let mut acc = (Poly::zero(), Poly::one());
            for t in terms(e) {
                let (n, d) = rational_function(&t, v)?;
                let num = acc.0.mul(&d).add(&n.mul(&acc.1));
                let den = acc.1.mul(&d);
                acc = reduce(num, den);
            }
            acc
        }
        Node::Mul(..) => {
            let mut acc = (Poly::one(), Poly::one());
            for f in factors(e) {
                let (n, d) = rational_function(&f, v)?;
                acc = reduce(acc.0.mul(&n), acc.1.mul(&d));
            }
            acc
        }
        Node::Pow(b, x) => {
            let n = x.as_i64()?;
            let (bn, bd) = rational_function(b, v)?;
            let m = n.unsigned_abs() as usize;
            if m.saturating_mul(bn.degree().max(bd.degree())) > MAX_DEGREE {
                return None;
            }
            let (pn, pd) = (bn.pow(m as u32), bd.pow(m as u32));
            if n >= 0 {
                (pn, pd)
            } else {
                if pn.is_zero() {
                    return None;
                }
                reduce(pd, pn)
            }
        }
        _ => return None,
    };
    if r.0.degree() > MAX_DEGREE || r.1.degree() > MAX_DEGREE {
        return None;
    }
    Some(r)
}

/// Solve the square system `a * x = b` over the rationals.
pub fn solve_linear(mut a: Vec<Vec<BigRational>>, mut b: Vec<BigRational>) -> Option<Vec<BigRational>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        b.swap(col, piv);
        let inv = a[col][col].recip();
        let pivot = a[col].clone();
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] * &inv;
            for (x, p) in a[r][col..].iter_mut().zip(&pivot[col..]) {
                *x -= &f * p;
            }
            let t = &f * &b[col];
            b[r] -= t;
        }
    }
    Some((0..n).map(|k| &b[k] / &a[k][k]).collect())
}

/// One block of a partial fraction decomposition: `numer / base^power`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fraction {
    pub numer: Poly,
    pub base: Poly,
    pub power: usize,
}

/// Decompose `n/d` into a polynomial part and proper fractions over the
/// rational factors of `d` and its square-free remainder.
pub fn partial_fractions(n: &Poly, d: &Poly) -> Option<(Poly, Vec<Fraction>)> {
    if d.degree() == 0 {
        return None;
    }
    let (n, d) = reduce(n.clone(), d.clone());
    let (quo, rem) = n.div_rem(&d);
    if rem.is_zero() {
        return Some((quo, Vec::new()));
    }
    // Factor the denominator into pairwise coprime powers.
    let lead = d.lead();
    let mut blocks: Vec<(Poly, usize)> = Vec::new();
    let mut rest = d.monic();
    for (r, m) in d.rational_roots() {
        let lin = Poly::linear_root(r);
        rest = rest.div_rem(&lin.pow(m as u32)).0;
        blocks.push((lin, m));
    }
    if rest.degree() > 0 {
        blocks.extend(rest.square_free());
    }
    // Ansatz: for every block b^m, numerators of degree < deg b over b^1..b^m.
    let mut shapes: Vec<(usize, usize, usize)> = Vec::new(); // (block, power, coeff index)
    for (bi, (b, m)) in blocks.iter().enumerate() {
        for p in 1..=*m {
            for k in 0..b.degree() {
                shapes.push((bi, p, k));
            }
        }
    }
    let size = d.degree();
    if shapes.len() != size {
        return None;
    }
    let dm = d.monic();
    let mut columns: Vec<Poly> = Vec::with_capacity(size);
    for &(bi, p, k) in &shapes {
        let (b, _) = &blocks[bi];
        let cof = dm.div_rem(&b.pow(p as u32)).0;
        let mono = Poly::new(
            (0..=k)
                .map(|j| if j == k { BigRational::one() } else { BigRational::zero() })
                .collect(),
        );
        columns.push(cof.mul(&mono));
    }
    let target = rem.scale(&lead.recip());
    let a: Vec<Vec<BigRational>> = (0..size)
        .map(|row| columns.iter().map(|c| c.coeff(row)).collect())
        .collect();
    let b: Vec<BigRational> = (0..size).map(|row| target.coeff(row)).collect();
    let sol = solve_linear(a, b)?;
    let mut out: Vec<Fraction> = Vec::new();
    for (bi, (base, m)) in blocks.iter().enumerate() {
        for p in 1..=*m {
            let numer = Poly::new(
                shapes
                    .iter()
                    .zip(&sol)
                    .filter(|((b2, p2, _), _)| *b2 == bi && *p2 == p)
                    .map(|(_, c)| c.clone())
                    .collect(),
            );
            if !numer.is_zero() {
                out.push(Fraction {
                    numer,
                    base: base.clone(),
                    power: p,
                });
            }
        }
    }
    Some((quo, out))
}

/// Rebuild a decomposition as a canonical sum.
pub fn fractions_to_expr(quo: &Poly, fr: &[Fraction], v: Symbol) -> Expr {
    let mut parts = vec![quo.to_expr(v)];
    for f in fr {
        parts.push(mul(
            f.numer.to_expr(v),
            pow(f.base.to_expr(v), Expr::int(-(f.power as i64))),
        ));
    }
    add_all(parts)
}

/// Rebuild `n/d` as a single canonical quotient.
pub fn quotient_to_expr(n: &Poly, d: &Poly, v: Symbol) -> Expr {
    mul(n.to_expr(v), recip(d.to_expr(v)))
}

/// Multiply out products and small integer powers of sums, recursively.
/// Returns `None` when the result would exceed [`MAX_EXPAND_TERMS`].
pub fn expand(e: &Expr) -> Option<Expr> {
    Some(match e.node() {
        Node::Integer(_) | Node::Rational(_) | Node::Symbol(_) | Node::Constant(_) => e.clone(),
        Node::Add(..) => add_all(terms(e).iter().map(expand).collect::<Option<Vec<_>>>()?),
        Node::Mul(..) => {
            let mut acc: Vec<Expr> = vec![Expr::one()];
            for f in factors(e) {
                let fx = expand(&f)?;
                acc = product_terms(&acc, &terms(&fx))?;
            }
            add_all(acc)
        }
        Node::Pow(b, x) => {
            let bx = expand(b)?;
            match x.as_i64() {
                Some(n) if n.abs() >= 2 && n.abs() <= MAX_EXPAND_POWER && matches!(bx.node(), Node::Add(..)) => {
                    let ts = terms(&bx);
                    let mut acc: Vec<Expr> = vec![Expr::one()];
                    for _ in 0..n.abs() {
                        acc = product_terms(&acc, &ts)?;
                    }
                    let p = add_all(acc);
                    if n > 0 {
                        p
                    } else {
                        recip(p)
                    }
                }
                _ => pow(bx, expand(x)?),
            }
        }
        Node::Func(f, a) => func(*f, expand(a)?),
        Node::Integral(a, v) => Expr::integral(expand(a)?, *v),
    })
}

fn product_terms(a: &[Expr], b: &[Expr]) -> Option<Vec<Expr>> {
    if a.len().saturating_mul(b.len()) > MAX_EXPAND_TERMS {
        return None;
    }
    let mut out = Vec::with_capacity(a.len() * b.len());
    for s in a {
        for t in b {
            out.push(mul(s.clone(), t.clone()));
        }
    }
    let collected = terms(&add_all(out.clone()));
    Some(collected)
}

/// Coefficients of `e` as a polynomial of degree at most `max_deg` in `v`,
/// where coefficients may be any expressions free of `v`.
pub fn coefficients(e: &Expr, v: Symbol, max_deg: usize) -> Option<Vec<Expr>> {
    let ex = if e.is_free_of(v) { e.clone() } else { expand(e)? };
    let mut parts: Vec<Vec<Expr>> = vec![Vec::new(); max_deg + 1];
    for t in terms(&ex) {
        let mut deg = 0usize;
        let mut rest: Vec<Expr> = Vec::new();
        for f in factors(&t) {
            if f.is_free_of(v) {
                rest.push(f);
                continue;
            }
            match f.node() {
                Node::Symbol(s) if *s == v => deg += 1,
                Node::Pow(b, x) if b.as_symbol() == Some(v) => {
                    let k = x.as_i64()?;
                    if k < 0 {
                        return None;
                    }
                    deg += k as usize;
                }
                _ => return None,
            }
        }
        if deg > max_deg {
            return None;
        }
        parts[deg].push(mul_all(rest));
    }
    Some(parts.into_iter().map(add_all).collect())
}

/// `e` as `a*v + b` with `a != 0`.
pub fn affine(e: &Expr, v: Symbol) -> Option<(Expr, Expr)> {
    let c = coefficients(e, v, 1)?;
    (!c[1].is_zero()).then(|| (c[1].clone(), c[0].clone()))
}

/// Sign of a real constant expression, if it can be decided numerically.
pub fn numeric_sign(e: &Expr) -> Option<i8> {
    if let Some(r) = e.as_rational() {
        return Some(if r.is_positive() {
            1
        } else if r.is_negative() {
            -1
        } else {
            0
        });
    }
    if !e.symbols().is_empty() || e.has_integral() {
        return None;
    }
    let z = crate::numeric::eval_real_point(e, &[]).ok()?;
    if z.im.abs() > 1e-12 * z.re.abs().max(1.0) || z.re.abs() < 1e-12 {
        return None;
    }
    Some(if z.re > 0.0 { 1 } else { -1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::canon::{add, div, num, square, sub};

    fn x() -> Expr {
        Expr::x()
    }

    fn p(c: &[i64]) -> Poly {
        Poly::new(c.iter().map(|&k| q(k)).collect())
    }

    #[test]
    fn division_and_gcd() {
        // (x^2 - 1) / (x - 1) = x + 1
        let (quo, rem) = p(&[-1, 0, 1]).div_rem(&p(&[-1, 1]));
        assert_eq!(quo, p(&[1, 1]));
        assert!(rem.is_zero());
        assert_eq!(p(&[-1, 0, 1]).gcd(&p(&[1, 2, 1])), p(&[1, 1]));
    }

    #[test]
    fn roots_and_square_free() {
        // x^3 - x^2 - x + 1 = (x - 1)^2 (x + 1)
        let f = p(&[1, -1, -1, 1]);
        let mut roots = f.rational_roots();
        roots.sort();
        assert_eq!(roots, vec![(q(-1), 1), (q(1), 2)]);
        let sf = f.square_free();
        assert_eq!(sf, vec![(p(&[1, 1]), 1), (p(&[-1, 1]), 2)]);
    }

    #[test]
    fn expression_round_trip() {
        let e = add(square(x()), mul(num(3), x()));
        let poly = Poly::from_expr(&e, Symbol::X).unwrap();
        assert_eq!(poly, p(&[0, 3, 1]));
        assert_eq!(poly.to_expr(Symbol::X), e);
        assert!(Poly::from_expr(&crate::expr::canon::func(crate::Func::Sin, x()), Symbol::X).is_none());
    }

    #[test]
    fn partial_fraction_of_simple_quotient() {
        // 1/(x^2 - 1) = (1/2)/(x - 1) - (1/2)/(x + 1)
        let e = recip(sub(square(x()), num(1)));
        let (n, d) = rational_function(&e, Symbol::X).unwrap();
        let (quo, fr) = partial_fractions(&n, &d).unwrap();
        let back = fractions_to_expr(&quo, &fr, Symbol::X);
        let expected = add(
            div(Expr::rational(1, 2), sub(x(), num(1))),
            div(Expr::rational(-1, 2), add(x(), num(1))),
        );
        assert_eq!(back, expected);
    }

    #[test]
    fn partial_fractions_with_quadratic_block() {
        // x / ((x + 1)(x^2 + 1)) recombines to the original quotient
        let d = p(&[1, 1]).mul(&p(&[1, 0, 1]));
        let n = p(&[0, 1]);
        let (quo, fr) = partial_fractions(&n, &d).unwrap();
        assert_eq!(fr.len(), 2);
        let back = fractions_to_expr(&quo, &fr, Symbol::X);
        let (bn, bd) = rational_function(&back, Symbol::X).unwrap();
        assert_eq!(reduce(bn, bd), reduce(n, d));
    }

    #[test]
    fn expands_products_and_powers() {
        let e = square(add(x(), num(1)));
        assert_eq!(expand(&e).unwrap(), add_all([square(x()), mul(num(2), x()), num(1)]));
        let big = pow(add(x(), num(1)), Expr::int(300));
        assert_eq!(expand(&big).unwrap(), big);
    }

    #[test]
    fn symbolic_coefficients() {
        let pi = Expr::constant(crate::Constant::Pi);
        let e = add(mul(pi.clone(), square(x())), num(2));
        let c = coefficients(&e, Symbol::X, 2).unwrap();
        assert_eq!(c, vec![num(2), num(0), pi.clone()]);
        assert_eq!(affine(&add(mul(num(3), x()), pi.clone()), Symbol::X), Some((num(3), pi)));
        assert_eq!(numeric_sign(&sub(num(3), Expr::constant(crate::Constant::Pi))), Some(-1));
    }
}
