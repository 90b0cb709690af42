//! Soundness check of a finished proof by differentiation.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codec::StepRecord;
use crate::expr::canon::sub;
use crate::expr::diff::{differentiate, differentiate_through_integrals};
use crate::numeric::{close, sample_values};
use crate::search::{replay, ProofResult};
use crate::{Expr, Node, Symbol};

/// Points compared when the difference does not simplify to zero.
pub const VERIFY_POINTS: usize = 8;
/// Scale-normalised tolerance: `|a - b| <= VERIFY_TOL * max(1, |b|)`.
pub const VERIFY_TOL: f64 = 1e-6;
const VERIFY_SEED: u64 = 0x5eed;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "reason", rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail(String),
    Inconclusive(String),
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        *self == Verdict::Pass
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Pass => write!(f, "PASS"),
            Verdict::Fail(r) => write!(f, "FAIL ({})", r),
            Verdict::Inconclusive(r) => write!(f, "INCONCLUSIVE ({})", r),
        }
    }
}

/// The single variable every integral of `e` integrates over.
fn integration_variable(e: &Expr) -> Option<Symbol> {
    let mut v = None;
    for g in e.integrals() {
        let Node::Integral(_, w) = g.node() else { continue };
        match v {
            None => v = Some(*w),
            Some(u) if u == *w => {}
            Some(_) => return None,
        }
    }
    v
}

/// Check that `result` is an antiderivative of `original`: its derivative
/// must equal the derivative of `original` with each `∫h dx` read as `h`.
pub fn verify_antiderivative(original: &Expr, result: &Expr) -> Verdict {
    if result.has_integral() {
        return Verdict::Fail("integral left in result".into());
    }
    let Some(v) = integration_variable(original) else {
        return Verdict::Inconclusive("no single integration variable".into());
    };
    let (want, got) = match (differentiate_through_integrals(original, v), differentiate(result, v)) {
        (Ok(w), Ok(g)) => (w, g),
        (Err(e), _) | (_, Err(e)) => return Verdict::Inconclusive(e.to_string()),
    };
    if sub(got.clone(), want.clone()).is_zero() {
        return Verdict::Pass;
    }
    let symbols: Vec<Symbol> = got.symbols().union(&want.symbols()).copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(VERIFY_SEED);
    let Some(points) = sample_values(&mut rng, &[&got, &want], &symbols, VERIFY_POINTS) else {
        return Verdict::Inconclusive("no evaluable sample points".into());
    };
    for p in points {
        if !close(p[0], p[1], VERIFY_TOL) {
            return Verdict::Fail(format!("derivative {} differs from {} numerically", p[0], p[1]));
        }
    }
    Verdict::Pass
}

/// Full check of a proof: the steps must replay to the claimed result, and
/// the result must differentiate back to the original integrand.
pub fn verify_steps(original: &Expr, steps: &[StepRecord], result: &Expr) -> Verdict {
    match replay(original, steps) {
        None => Verdict::Fail("replay diverges".into()),
        Some(r) if r != *result => Verdict::Fail("replay reaches a different expression".into()),
        Some(_) => verify_antiderivative(original, result),
    }
}

pub fn verify_solution(original: &Expr, proof: &ProofResult) -> Verdict {
    if !proof.solved() {
        return Verdict::Fail(format!("search ended with {:?}", proof.status));
    }
    verify_steps(original, &proof.steps, &proof.expression)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse;

    #[test]
    fn antiderivatives() {
        let f = parse("Integral(1 + 2*cos(2x)/sqrt(sin(2x)^2 + 1), x)").unwrap();
        assert!(verify_antiderivative(&f, &parse("x + asinh(sin(2x))").unwrap()).is_pass());
        let one = parse("Integral(1, x)").unwrap();
        assert!(verify_antiderivative(&one, &parse("x + 1").unwrap()).is_pass());
        assert!(matches!(
            verify_antiderivative(&one, &parse("2x").unwrap()),
            Verdict::Fail(_)
        ));
        let mixed = parse("x^2 + Integral(cos(x), x)").unwrap();
        assert!(verify_antiderivative(&mixed, &parse("x^2 + sin(x)").unwrap()).is_pass());
    }

    #[test]
    fn numeric_fallback() {
        // sin^2 + cos^2 = 1 is not applied by the canonical form
        let f = parse("Integral(2*sin(x)*cos(x), x)").unwrap();
        assert!(verify_antiderivative(&f, &parse("-cos(x)^2").unwrap()).is_pass());
        assert!(verify_antiderivative(&f, &parse("sin(x)^2").unwrap()).is_pass());
    }
}
