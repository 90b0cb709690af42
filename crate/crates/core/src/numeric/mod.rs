//! Numeric evaluation over complex numbers, generic in the float type.

pub mod special;

use std::collections::HashMap;
use std::fmt::Debug;

use num_complex::Complex;
use num_traits::{Float, FloatConst, ToPrimitive};
use rand::Rng;
use thiserror::Error;

use crate::expr::{Constant, Expr, Func, Node, Symbol};

/// Float types the evaluator runs on.
pub trait Scalar: Float + FloatConst + Debug + Send + Sync + 'static {}

impl Scalar for f32 {}
impl Scalar for f64 {}

pub type Bindings<T> = HashMap<Symbol, Complex<T>>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("unbound symbol {0}")]
    Unbound(Symbol),
    #[error("domain error at {node}: {reason}")]
    Domain { node: Expr, reason: &'static str },
    #[error("integral nodes cannot be evaluated numerically")]
    Integral,
}

fn cst<T: Scalar>(v: f64) -> T {
    T::from(v).unwrap()
}

fn domain<T>(node: &Expr, reason: &'static str) -> Result<T, EvalError> {
    Err(EvalError::Domain {
        node: node.clone(),
        reason,
    })
}

fn finite<T: Scalar>(z: Complex<T>, node: &Expr) -> Result<Complex<T>, EvalError> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        domain(node, "non-finite value")
    }
}

/// Evaluate `e` with principal branches for every multivalued function.
pub fn eval<T: Scalar>(e: &Expr, env: &Bindings<T>) -> Result<Complex<T>, EvalError> {
    let z = match e.node() {
        Node::Integer(_) | Node::Rational(_) => {
            let v = e.to_f64().unwrap_or(f64::INFINITY);
            Complex::new(cst(v), T::zero())
        }
        Node::Symbol(s) => *env.get(s).ok_or(EvalError::Unbound(*s))?,
        Node::Constant(Constant::E) => Complex::new(T::E(), T::zero()),
        Node::Constant(Constant::Pi) => Complex::new(T::PI(), T::zero()),
        Node::Constant(Constant::I) => Complex::new(T::zero(), T::one()),
        Node::Add(a, b) => eval(a, env)? + eval(b, env)?,
        Node::Mul(a, b) => eval(a, env)? * eval(b, env)?,
        Node::Pow(b, x) => {
            let base = eval(b, env)?;
            if let Some(n) = x.as_integer().and_then(|n| n.to_i32()) {
                if base == Complex::new(T::zero(), T::zero()) && n < 0 {
                    return domain(e, "division by zero");
                }
                base.powi(n)
            } else {
                let ex = eval(x, env)?;
                if base.norm_sqr() == T::zero() {
                    if ex.re > T::zero() {
                        Complex::new(T::zero(), T::zero())
                    } else {
                        return domain(e, "zero to a non-positive power");
                    }
                } else {
                    (base.ln() * ex).exp()
                }
            }
        }
        Node::Func(f, a) => {
            let v = eval(a, env)?;
            apply_func(*f, v, e)?
        }
        Node::Integral(..) => return Err(EvalError::Integral),
    };
    finite(z, e)
}

fn recip_checked<T: Scalar>(z: Complex<T>, node: &Expr) -> Result<Complex<T>, EvalError> {
    if z.norm_sqr() == T::zero() {
        domain(node, "division by zero")
    } else {
        Ok(z.inv())
    }
}

fn real_arg<T: Scalar>(z: Complex<T>, node: &Expr) -> Result<T, EvalError> {
    let tol = cst::<T>(1e-12) * (T::one() + z.re.abs());
    if z.im.abs() > tol {
        domain(node, "special function of a non-real argument")
    } else {
        Ok(z.re)
    }
}

fn apply_func<T: Scalar>(f: Func, z: Complex<T>, node: &Expr) -> Result<Complex<T>, EvalError> {
    use Func::*;
    let one = Complex::new(T::one(), T::zero());
    Ok(match f {
        Sin => z.sin(),
        Cos => z.cos(),
        Tan => z.tan(),
        Cot => recip_checked(z.tan(), node)?,
        Sec => recip_checked(z.cos(), node)?,
        Csc => recip_checked(z.sin(), node)?,
        Asin => z.asin(),
        Acos => z.acos(),
        Atan => z.atan(),
        Acot => recip_checked(z, node)?.atan(),
        Asec => recip_checked(z, node)?.acos(),
        Acsc => recip_checked(z, node)?.asin(),
        Sinh => z.sinh(),
        Cosh => z.cosh(),
        Tanh => z.tanh(),
        Coth => recip_checked(z.tanh(), node)?,
        Sech => recip_checked(z.cosh(), node)?,
        Csch => recip_checked(z.sinh(), node)?,
        Asinh => z.asinh(),
        Acosh => z.acosh(),
        Atanh => {
            if z == one || z == -one {
                return domain(node, "atanh pole");
            }
            z.atanh()
        }
        Acoth => {
            let w = recip_checked(z, node)?;
            if w == one || w == -one {
                return domain(node, "acoth pole");
            }
            w.atanh()
        }
        Asech => recip_checked(z, node)?.acosh(),
        Acsch => recip_checked(z, node)?.asinh(),
        Exp => z.exp(),
        Log => {
            if z.norm_sqr() == T::zero() {
                return domain(node, "log of zero");
            }
            z.ln()
        }
        Erf => Complex::new(special::erf(real_arg(z, node)?), T::zero()),
        Ei => {
            let x = real_arg(z, node)?;
            if x == T::zero() {
                return domain(node, "Ei(0)");
            }
            Complex::new(special::ei(x), T::zero())
        }
        Ci => {
            let x = real_arg(z, node)?;
            if x == T::zero() {
                return domain(node, "Ci(0)");
            }
            let c = special::ci(x.abs());
            // Ci(-x) = Ci(x) + i*pi on the principal branch.
            let im = if x < T::zero() { T::PI() } else { T::zero() };
            Complex::new(c, im)
        }
        Si => Complex::new(special::si(real_arg(z, node)?), T::zero()),
    })
}

/// Evaluate in double precision with real bindings.
pub fn eval_real_point(e: &Expr, env: &[(Symbol, f64)]) -> Result<Complex<f64>, EvalError> {
    let b: Bindings<f64> = env
        .iter()
        .map(|(s, v)| (*s, Complex::new(*v, 0.0)))
        .collect();
    eval(e, &b)
}

/// Lower and upper end of the verification sampling interval.
pub const SAMPLE_LO: f64 = 0.1;
pub const SAMPLE_HI: f64 = 2.5;
/// Maximum draws when rejecting points where evaluation fails.
pub const MAX_SAMPLE_ATTEMPTS: usize = 50;

/// Draw one binding per symbol uniformly from the sampling interval.
pub fn sample_point<R: Rng + ?Sized>(rng: &mut R, symbols: &[Symbol]) -> Bindings<f64> {
    symbols
        .iter()
        .map(|s| (*s, Complex::new(rng.gen_range(SAMPLE_LO..SAMPLE_HI), 0.0)))
        .collect()
}

/// Evaluate a list of expressions at up to `count` random points, skipping
/// points where any of them fails to evaluate. Returns `None` if fewer than
/// `count` points were found within [`MAX_SAMPLE_ATTEMPTS`] draws.
pub fn sample_values<R: Rng + ?Sized>(
    rng: &mut R,
    exprs: &[&Expr],
    symbols: &[Symbol],
    count: usize,
) -> Option<Vec<Vec<Complex<f64>>>> {
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        if attempts >= MAX_SAMPLE_ATTEMPTS {
            return None;
        }
        attempts += 1;
        let env = sample_point(rng, symbols);
        let vals: Result<Vec<_>, _> = exprs.iter().map(|e| eval(e, &env)).collect();
        if let Ok(v) = vals {
            out.push(v);
        }
    }
    Some(out)
}

/// `|a - b| <= tol * max(1, |b|)`.
pub fn close(a: Complex<f64>, b: Complex<f64>, tol: f64) -> bool {
    (a - b).norm() <= tol * b.norm().max(1.0)
}

/// Convert a rational to the scalar type, saturating to infinity.
pub fn to_scalar<T: Scalar>(e: &Expr) -> Option<T> {
    e.as_rational().and_then(|r| r.to_f64()).and_then(T::from)
}
