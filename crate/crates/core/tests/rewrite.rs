//! Rewrites must not change the value of what they rewrite.

use stepint::engine::rewrite::{rewrite_function, rewrite_integrand};
use stepint::engine::Action;
use stepint::numeric::eval_real_point;
use stepint::{parse, Expr, Symbol};

fn same_values(a: &Expr, b: &Expr) {
    for x in [0.31, 0.52, 0.77, 1.13] {
        let va = eval_real_point(a, &[(Symbol::X, x)]).unwrap();
        let vb = eval_real_point(b, &[(Symbol::X, x)]).unwrap();
        assert!((va - vb).norm() <= 1e-9 * va.norm().max(1.0), "{} vs {} at {}", a, b, x);
    }
}

#[test]
fn function_rewrites_preserve_value() {
    use Action::*;
    for (a, s) in [
        (Tan1, "tan(2x)"),
        (Cot1, "cot(x)"),
        (Tanh1, "tanh(x)"),
        (Coth1, "coth(x + 1)"),
        (Cos1, "cos(x)^(-3)"),
        (Sec1, "sec(x)"),
        (Csc1, "csc(x)"),
        (Sech1, "sech(x)"),
        (Csch1, "csch(x)"),
        (TrigExpand, "sin(3x)"),
        (TrigExpand, "cos(x + 2)"),
        (TrigExpand, "cos(2x + 1)"),
    ] {
        let g = parse(s).unwrap();
        let r = rewrite_function(a, &g).unwrap_or_else(|| panic!("{} on {}", a, s));
        assert_ne!(r, g);
        same_values(&g, &r);
    }
    assert!(rewrite_function(Action::TrigExpand, &parse("sin(x)").unwrap()).is_none());
    assert!(rewrite_function(Action::Cos1, &parse("cos(x)^2").unwrap()).is_none());
}

#[test]
fn integrand_rewrites_preserve_value() {
    use Action::*;
    for (a, s) in [
        (SinCosEven, "sin(x)^2*cos(x)^2"),
        (SinOddCos, "sin(x)^3*cos(x)^2"),
        (SinOddCos, "sin(x)^3/cos(x)"),
        (CosOddSin, "3*cos(2x)^5"),
        (SecEvenTan, "sec(x)^4*tan(x)"),
        (TanOddSec, "tan(x)^3*sec(x)"),
        (Tan2, "tan(x)^2"),
        (CotCscEven, "csc(x)^4*cot(x)^2"),
        (CotOddCsc, "cot(x)^3*csc(x)"),
        (PartialFractions, "1/(x^2 - 1)"),
        (PartialFractions, "(x^3 + 2)/((x + 1)^2*(x - 2))"),
        (Cancel, "(x^2 - 1)/(x - 1)"),
        (Expand, "(x + 1)^3*x"),
    ] {
        let f = parse(s).unwrap();
        let r = rewrite_integrand(a, &f, Symbol::X).unwrap_or_else(|| panic!("{} on {}", a, s));
        same_values(&f, &r);
    }
    assert!(rewrite_integrand(Action::Expand, &parse("x + 1").unwrap(), Symbol::X).is_none());
    assert!(rewrite_integrand(Action::SinOddCos, &parse("sin(x)^2").unwrap(), Symbol::X).is_none());
}
