//! Step-by-step symbolic integration.

pub mod codec;
pub mod engine;
pub mod expr;
pub mod numeric;
pub mod parse;
pub mod poly;
pub mod policy;
pub mod search;
pub mod datagen;
pub mod eval;
pub mod verify;

pub use expr::{Constant, Expr, Func, Node, Op, Symbol};
pub use parse::{parse, ParseError};

/// Exact rational coefficients.
pub type Rational = num_rational::BigRational;
/// Complex value in double precision.
pub type Complex64 = num_complex::Complex<f64>;
/// Complex value in single precision.
pub type Complex32 = num_complex::Complex<f32>;
