//! Helpers shared by the property and acceptance tests.
#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stepint::datagen::{expression_rng, sample_expression, BinOp, GenConfig, Leaf, RawTree};
use stepint::engine::{Action, ActionCall, EngineState};
use stepint::expr::diff::differentiate_through_integrals;
use stepint::numeric::{close, sample_values};
use stepint::policy::{heuristic_propose, heuristic_propose_until};
use stepint::{parse, Constant, Expr, Symbol};

pub fn p(s: &str) -> Expr {
    parse(s).unwrap_or_else(|e| panic!("{}: {}", s, e))
}

/// The `i`-th random integrand of the stream `seed`.
pub fn random_expr(seed: u64, i: u64) -> Expr {
    sample_expression(&GenConfig::default(), &mut expression_rng(seed, i)).expect("sampler finds an integrand")
}

/// The raw tree built with the non-simplifying constructors.
pub fn raw_expr(t: &RawTree) -> Expr {
    match t {
        RawTree::Leaf(Leaf::X) => Expr::x(),
        RawTree::Leaf(Leaf::Pi) => Expr::constant(Constant::Pi),
        RawTree::Leaf(Leaf::E) => Expr::constant(Constant::E),
        RawTree::Leaf(Leaf::Int(n)) => Expr::int(*n),
        RawTree::Unary(f, a) => Expr::raw_func(*f, raw_expr(a)),
        RawTree::Binary(op, a, b) => {
            let (a, b) = (raw_expr(a), raw_expr(b));
            match op {
                BinOp::Add => Expr::raw_add(a, b),
                BinOp::Mul => Expr::raw_mul(a, b),
                BinOp::Sub => Expr::raw_add(a, Expr::raw_mul(Expr::int(-1), b)),
                BinOp::Div => Expr::raw_mul(a, Expr::raw_pow(b, Expr::int(-1))),
            }
        }
    }
}

/// All subtrees in pre-order.
pub fn subtrees(e: &Expr) -> Vec<Expr> {
    let mut out = Vec::new();
    e.walk(&mut |n| out.push(n.clone()));
    out
}

/// Whether `a` and `b` have equal derivatives (integrals read as their
/// integrands) at 8 sampled points. `None` if no points evaluate.
pub fn same_derivative(a: &Expr, b: &Expr, seed: u64) -> Option<bool> {
    let da = differentiate_through_integrals(a, Symbol::X).ok()?;
    let db = differentiate_through_integrals(b, Symbol::X).ok()?;
    let symbols: Vec<Symbol> = da.symbols().union(&db.symbols()).copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = sample_values(&mut rng, &[&da, &db], &symbols, 8)?;
    Some(pts.iter().all(|v| close(v[0], v[1], 1e-6)))
}

/// Apply `call` on `target` inside `root`, then let the heuristic finish any
/// integrals over substituted variables so the result is in `x` again.
pub fn apply_and_close(root: &Expr, target: &Expr, call: &ActionCall) -> Option<Expr> {
    let mut state = EngineState::new();
    let cur = state.register(root);
    let r = state.apply(&cur, target, call);
    if !r.modified {
        return None;
    }
    let mut cur = r.expression;
    for _ in 0..16 {
        if state.substitutions(&cur).is_empty() {
            return Some(cur);
        }
        let subs = state.substitutions(&cur).to_vec();
        let c = heuristic_propose(&cur, &subs, 1).into_iter().next()?;
        cur = state.apply(&cur, &c.subexpr, &c.call).expression;
    }
    None
}

/// One instance per action: integral, target (`None` for the integral
/// itself) and parameters.
pub fn action_instances() -> Vec<(Action, &'static str, Option<&'static str>, Vec<&'static str>)> {
    use Action::*;
    let whole = |a, f| (a, f, None, vec![]);
    let node = |a, f, g| (a, f, Some(g), vec![]);
    vec![
        whole(Constant, "Integral(3, x)"),
        whole(Power, "Integral(x^5, x)"),
        whole(Exp, "Integral(exp(x), x)"),
        (ConstantTimes, "Integral(3*sin(x), x)", None, vec!["3"]),
        whole(Reciprocal, "Integral(1/x, x)"),
        whole(NestedPow, "Integral((x^3)^(1/2), x)"),
        whole(Arcsin, "Integral(1/sqrt(1 - x^2), x)"),
        whole(Arcsinh, "Integral(1/sqrt(x^2 + 1), x)"),
        whole(Sin, "Integral(sin(x), x)"),
        whole(Cos, "Integral(cos(x), x)"),
        whole(SecTan, "Integral(sec(x)*tan(x), x)"),
        whole(CscCot, "Integral(csc(x)*cot(x), x)"),
        whole(Sec2, "Integral(sec(x)^2, x)"),
        whole(Csc2, "Integral(csc(x)^2, x)"),
        whole(Sinh, "Integral(sinh(x), x)"),
        whole(Cosh, "Integral(cosh(x), x)"),
        whole(Arctan, "Integral(1/(x^2 + 1), x)"),
        whole(ReciprocalSqrtQuadratic, "Integral(1/sqrt(x^2 + x + 1), x)"),
        whole(Ci, "Integral(cos(x)/x, x)"),
        whole(Ei, "Integral(exp(x)/x, x)"),
        whole(UpperGamma, "Integral(x^3*exp(2x), x)"),
        whole(Add, "Integral(x + sin(x), x)"),
        (U, "Integral(2*x*cos(x^2), x)", None, vec!["y", "x^2"]),
        (Parts, "Integral(x*cos(x), x)", None, vec!["x", "cos(x)"]),
        whole(PartialFractions, "Integral(1/(x^2 - 1), x)"),
        whole(Cancel, "Integral((x^2 - 1)/(x - 1), x)"),
        whole(Expand, "Integral((x + 1)^3*x, x)"),
        node(Tan1, "Integral(tan(2x), x)", "tan(2x)"),
        node(Cot1, "Integral(cot(x), x)", "cot(x)"),
        node(Cos1, "Integral(cos(x)^(-3), x)", "cos(x)^(-3)"),
        node(Sec1, "Integral(sec(x), x)", "sec(x)"),
        node(Csc1, "Integral(csc(x), x)", "csc(x)"),
        node(Tanh1, "Integral(tanh(x), x)", "tanh(x)"),
        node(Coth1, "Integral(coth(x + 1), x)", "coth(x + 1)"),
        node(Sech1, "Integral(sech(x), x)", "sech(x)"),
        node(Csch1, "Integral(csch(x), x)", "csch(x)"),
        node(TrigExpand, "Integral(sin(3x), x)", "sin(3x)"),
        whole(SinCosEven, "Integral(sin(x)^2*cos(x)^2, x)"),
        whole(SinOddCos, "Integral(sin(x)^3*cos(x)^2, x)"),
        whole(CosOddSin, "Integral(3*cos(2x)^5, x)"),
        whole(SecEvenTan, "Integral(sec(x)^4*tan(x), x)"),
        whole(TanOddSec, "Integral(tan(x)^3*sec(x), x)"),
        whole(Tan2, "Integral(tan(x)^2, x)"),
        whole(CotCscEven, "Integral(csc(x)^4*cot(x)^2, x)"),
        whole(CotOddCsc, "Integral(cot(x)^3*csc(x), x)"),
    ]
}

/// Check one action instance: it must apply, and the result must have the
/// derivative of the original.
pub fn check_instance(a: Action, root: &str, target: Option<&str>, params: &[&str]) -> Result<(), String> {
    let f = p(root);
    let g = target.map_or_else(|| f.clone(), p);
    let call = ActionCall::new(a, params.iter().map(|s| p(s)).collect());
    let r = apply_and_close(&f, &g, &call).ok_or_else(|| format!("{} does not apply to {}", a, root))?;
    match same_derivative(&f, &r, a as u64) {
        Some(true) => Ok(()),
        Some(false) => Err(format!("{} on {} gives {} with a different derivative", a, root, r)),
        None => Err(format!("{} on {}: no evaluable points", a, root)),
    }
}

/// A random (expression, target, call) triple. Targets are usually subtrees
/// of the expression; parameters are random subtrees or small expressions.
pub fn fuzz_triple(rng: &mut ChaCha8Rng, i: u64) -> (Expr, Expr, ActionCall) {
    let f = Expr::integral(random_expr(0xf022, i), Symbol::X);
    let subs = subtrees(&f);
    let pick = |rng: &mut ChaCha8Rng| subs[rng.gen_range(0..subs.len())].clone();
    let g = if rng.gen_bool(0.9) { pick(rng) } else { random_expr(0xf023, i) };
    let action = Action::ALL[rng.gen_range(0..Action::ALL.len())];
    let params = match action.arity() {
        0 => vec![],
        1 => vec![if rng.gen_bool(0.5) { Expr::int(rng.gen_range(-3..4)) } else { pick(rng) }],
        _ if action == Action::U => {
            let y = [Symbol::X, Symbol::Y, Symbol::Z][rng.gen_range(0..3)];
            vec![Expr::symbol(y), pick(rng)]
        }
        _ => vec![pick(rng), pick(rng)],
    };
    (f, g, ActionCall::new(action, params))
}

/// Serve heuristic candidates over TCP, answering each request after
/// `delay`; with `None` requests are read but never answered.
pub fn spawn_policy_server(delay: Option<std::time::Duration>) -> stepint::policy::PolicyAddr {
    use std::io::BufReader;
    use stepint::codec::tokens_to_tree;
    use stepint::policy::wire::{read_frame, write_frame};
    use stepint::policy::{PolicyRequest, PolicyResponse, WireCandidate};

    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            std::thread::spawn(move || {
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                while let Ok(req) = read_frame::<_, PolicyRequest>(&mut reader) {
                    let Some(delay) = delay else { continue };
                    std::thread::sleep(delay);
                    let e = tokens_to_tree(&req.expr).unwrap();
                    // A real server bounds its work too; an unbounded answer
                    // would keep computing after the client gave up.
                    let deadline = std::time::Instant::now() + std::time::Duration::from_secs(1);
                    let candidates = heuristic_propose_until(&e, &[], req.beam, Some(deadline))
                        .iter()
                        .map(WireCandidate::from_candidate)
                        .collect();
                    if write_frame(&mut stream, &PolicyResponse { v: 1, candidates }).is_err() {
                        break;
                    }
                }
            });
        }
    });
    stepint::policy::PolicyAddr::Tcp(addr)
}

/// Wraps a policy and records every expression it is asked about.
pub struct Recording<P> {
    pub inner: P,
    pub seen: Vec<Expr>,
}

impl<P: stepint::policy::Policy> stepint::policy::Policy for Recording<P> {
    fn propose(
        &mut self,
        e: &Expr,
        subs: &[stepint::engine::Substitution],
        n: usize,
    ) -> Result<stepint::policy::Proposal, stepint::policy::PolicyError> {
        self.seen.push(e.clone());
        self.inner.propose(e, subs, n)
    }

    fn name(&self) -> String {
        self.inner.name()
    }

    fn set_deadline(&mut self, deadline: Option<std::time::Instant>) {
        self.inner.set_deadline(deadline)
    }
}

/// A hard integrand the heuristic neither solves nor exhausts quickly.
pub const HARD: &str = "-asinh(x)/x + sin(9)*tan(x^2 + log(tanh(-(x - tan(x))*tanh(6)))) + cos(x)";
