//! Real special functions: erf, Ei, Ci, Si.

use num_complex::Complex;

use super::Scalar;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const MAX_ITER: usize = 500;

fn c<T: Scalar>(v: f64) -> T {
    T::from(v).unwrap()
}

/// Error function. Series in `x` up to |x| = 6; beyond that erf is ±1 to
/// double precision.
pub fn erf<T: Scalar>(x: T) -> T {
    if x.abs() > c(6.0) {
        return x.signum();
    }
    // erf x = 2/sqrt(pi) e^{-x^2} sum 2^n x^{2n+1} / (2n+1)!!
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    for n in 1..MAX_ITER {
        term = term * c::<T>(2.0) * x2 / c::<T>((2 * n + 1) as f64);
        sum = sum + term;
        if term.abs() <= sum.abs() * T::epsilon() {
            break;
        }
    }
    c::<T>(2.0) / T::PI().sqrt() * (-x2).exp() * sum
}

/// Exponential integral E1 for t > 0.
fn e1<T: Scalar>(t: T) -> T {
    let gamma: T = c(EULER_GAMMA);
    if t <= T::one() {
        let mut sum = T::zero();
        let mut fact = T::one();
        for k in 1..MAX_ITER {
            fact = fact * -t / c::<T>(k as f64);
            let term = fact / c::<T>(k as f64);
            sum = sum + term;
            if term.abs() <= sum.abs() * T::epsilon() {
                break;
            }
        }
        -gamma - t.ln() - sum
    } else {
        // Lentz continued fraction.
        let tiny: T = c(1e-30);
        let mut b = t + T::one();
        let mut cc = T::one() / tiny;
        let mut d = T::one() / b;
        let mut h = d;
        for i in 1..MAX_ITER {
            let a = -c::<T>((i * i) as f64);
            b = b + c::<T>(2.0);
            d = T::one() / (a * d + b);
            cc = b + a / cc;
            let del = cc * d;
            h = h * del;
            if (del - T::one()).abs() <= T::epsilon() {
                break;
            }
        }
        h * (-t).exp()
    }
}

/// Exponential integral Ei(x), principal value, x != 0.
pub fn ei<T: Scalar>(x: T) -> T {
    if x < T::zero() {
        return -e1(-x);
    }
    let gamma: T = c(EULER_GAMMA);
    if x < c(40.0) {
        let mut sum = T::zero();
        let mut fact = T::one();
        for k in 1..MAX_ITER {
            fact = fact * x / c::<T>(k as f64);
            let term = fact / c::<T>(k as f64);
            sum = sum + term;
            if term <= sum * T::epsilon() {
                break;
            }
        }
        gamma + x.ln() + sum
    } else {
        let mut sum = T::one();
        let mut term = T::one();
        for k in 1..MAX_ITER {
            let prev = term;
            term = term * c::<T>(k as f64) / x;
            if term >= prev || term < T::epsilon() {
                break;
            }
            sum = sum + term;
        }
        x.exp() / x * sum
    }
}

/// Cosine and sine integrals for x > 0.
fn cisi<T: Scalar>(x: T) -> (T, T) {
    let gamma: T = c(EULER_GAMMA);
    if x <= c(2.0) {
        let mut sum_c = T::zero();
        let mut sum_s = x;
        let mut term = x;
        for k in 1..MAX_ITER {
            // term holds x^k / k!
            term = term * x / c::<T>((k + 1) as f64);
            let kk = k + 1;
            let signed = if (kk / 2) % 2 == 1 { -term } else { term };
            if kk % 2 == 0 {
                sum_c = sum_c + signed / c::<T>(kk as f64);
            } else {
                sum_s = sum_s + signed / c::<T>(kk as f64);
            }
            if term / c::<T>(kk as f64) < T::epsilon() * c(1e-2) {
                break;
            }
        }
        (gamma + x.ln() + sum_c, sum_s)
    } else {
        // Continued fraction for E1(ix).
        let one = Complex::new(T::one(), T::zero());
        let tiny: T = c(1e-30);
        let mut b = Complex::new(T::one(), x);
        let mut cc = Complex::new(T::one() / tiny, T::zero());
        let mut d = one / b;
        let mut h = d;
        for i in 1..MAX_ITER {
            let a = -c::<T>((i * i) as f64);
            b = b + Complex::new(c(2.0), T::zero());
            d = one / (d * a + b);
            cc = b + one * a / cc;
            let del = cc * d;
            h = h * del;
            if (del.re - T::one()).abs() + del.im.abs() <= T::epsilon() {
                break;
            }
        }
        h = Complex::new(x.cos(), -x.sin()) * h;
        (-h.re, T::FRAC_PI_2() + h.im)
    }
}

/// Cosine integral for x > 0.
pub fn ci<T: Scalar>(x: T) -> T {
    cisi(x).0
}

/// Sine integral, odd in x.
pub fn si<T: Scalar>(x: T) -> T {
    if x == T::zero() {
        return T::zero();
    }
    let s = cisi(x.abs()).1;
    if x < T::zero() {
        -s
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn reference_values() {
        assert!(rel(ei(1.0), 1.895_117_816_355_936_8) < 1e-13);
        assert!(rel(ci(1.0), 0.337_403_922_900_968_1) < 1e-13);
        assert!(rel(si(1.0), 0.946_083_070_367_183) < 1e-13);
        assert!(rel(erf(1.0), 0.842_700_792_949_714_9) < 1e-13);
    }

    #[test]
    fn far_arguments() {
        assert!(rel(ei(-1.0), -0.219_383_934_395_520_3) < 1e-12);
        assert!(rel(ei(50.0), 1.058_563_689_713_169e20) < 1e-10);
        assert!(rel(ci(10.0), -0.045_456_433_004_455_37) < 1e-10);
        assert!(rel(si(10.0), 1.658_347_594_218_874) < 1e-12);
        assert!(rel(erf(3.0), 0.999_977_909_503_001_4) < 1e-14);
        assert_eq!(erf(7.0), 1.0);
        assert_eq!(si(-1.0), -si(1.0));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-6;
        for &x in &[0.3, 1.7, 2.5, 4.0] {
            let dei = (ei(x + h) - ei(x - h)) / (2.0 * h);
            assert!(rel(dei, f64::exp(x) / x) < 1e-7);
            let dci = (ci(x + h) - ci(x - h)) / (2.0 * h);
            assert!((dci - x.cos() / x).abs() < 1e-7);
            let dsi = (si(x + h) - si(x - h)) / (2.0 * h);
            assert!((dsi - x.sin() / x).abs() < 1e-7);
        }
    }

    #[test]
    fn single_precision() {
        assert!((erf(1.0f32) - 0.842_700_8).abs() < 1e-6);
        assert!((si(1.0f32) - 0.946_083_07).abs() < 1e-6);
    }
}
