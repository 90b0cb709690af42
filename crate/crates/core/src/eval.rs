//! Accuracy evaluation over held-out traces, node-count statistics and the
//! Fail@N robustness harness.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::tree_to_seq;
use crate::datagen::Trace;
use crate::engine::{ActionCall, EngineState};
use crate::expr::canon::{func, mul, num, pow, rat};
use crate::expr::canonicalize;
use crate::policy::{Policy, PolicyCandidate};
use crate::search::{integrate, node_histogram, ProofResult, SearchConfig};
use crate::verify::{verify_solution, Verdict};
use crate::{parse, Expr, Func, Symbol};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub p50_ms: f64,
    pub p90_ms: f64,
    pub p99_ms: f64,
    pub max_ms: f64,
}

impl Timing {
    pub fn from_durations(ds: &[Duration]) -> Option<Timing> {
        if ds.is_empty() {
            return None;
        }
        let mut ms: Vec<f64> = ds.iter().map(|d| d.as_secs_f64() * 1e3).collect();
        ms.sort_by(f64::total_cmp);
        let q = |p: f64| ms[((ms.len() - 1) as f64 * p).round() as usize];
        Some(Timing {
            p50_ms: q(0.5),
            p90_ms: q(0.9),
            p99_ms: q(0.99),
            max_ms: q(1.0),
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub policy: String,
    pub beam: usize,
    pub timeout_ms: u64,
    pub attempted: usize,
    /// Solved with a PASS verdict.
    pub solved: usize,
    pub inconclusive: usize,
    pub accuracy: f64,
    /// Binomial standard error of `accuracy`.
    pub std_error: f64,
    pub steps: usize,
    /// Reference steps found among the top-N candidates, token for token.
    pub step_match_exact: usize,
    /// Same, comparing subexpression and parameters after canonicalisation.
    pub step_match_canonical: usize,
    pub node_histogram: BTreeMap<usize, usize>,
    pub mean_nodes_solved: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub robustness: Vec<FailRow>,
}

impl EvalReport {
    pub fn step_match_rate(&self) -> f64 {
        ratio(self.step_match_canonical, self.steps)
    }

    /// `nodes,count` lines for plotting.
    pub fn histogram_csv(&self) -> String {
        let mut s = String::from("nodes,count\n");
        for (n, c) in &self.node_histogram {
            let _ = writeln!(s, "{},{}", n, c);
        }
        s
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EvalOptions {
    /// Record wall-clock percentiles. Off by default so reports are
    /// reproducible byte for byte.
    pub timing: bool,
    /// Skip the step-level comparison.
    pub skip_steps: bool,
}

/// One attempted expression.
#[derive(Clone, Debug)]
pub struct Attempt {
    pub proof: ProofResult,
    pub verdict: Verdict,
}

pub fn attempt<P: Policy + ?Sized>(root: &Expr, policy: &mut P, cfg: &SearchConfig) -> Attempt {
    let proof = integrate(root, policy, cfg);
    let verdict = if proof.solved() {
        verify_solution(root, &proof)
    } else {
        Verdict::Fail(format!("{:?}", proof.status).to_lowercase())
    };
    Attempt { proof, verdict }
}

/// Whether a reference step is among `cands`: `(exact, canonical)`.
fn step_matches(cands: &[PolicyCandidate], g: &Expr, call: &ActionCall) -> (bool, bool) {
    let seq = |e: &Expr| tree_to_seq(e);
    let exact = cands.iter().any(|c| {
        c.call.action == call.action
            && seq(&c.subexpr) == seq(g)
            && c.call.params.len() == call.params.len()
            && c.call.params.iter().zip(&call.params).all(|(a, b)| seq(a) == seq(b))
    });
    let canon = exact
        || cands.iter().any(|c| {
            c.call.action == call.action
                && canonicalize(&c.subexpr) == canonicalize(g)
                && c.call.params.len() == call.params.len()
                && c.call.params.iter().zip(&call.params).all(|(a, b)| canonicalize(a) == canonicalize(b))
        });
    (exact, canon)
}

/// `(steps, exact, canonical)` for one reference trace.
fn step_level<P: Policy + ?Sized>(t: &Trace, policy: &mut P, beam: usize) -> (usize, usize, usize) {
    let mut state = EngineState::new();
    let mut cur = state.register(t.root());
    let (mut exact, mut canon) = (0, 0);
    for s in &t.steps {
        let call = ActionCall::new(s.rule, s.params.clone());
        let subs = state.substitutions(&cur).to_vec();
        if let Ok(p) = policy.propose(&cur, &subs, beam) {
            let (e, c) = step_matches(&p.candidates, &s.subexpression, &call);
            exact += e as usize;
            canon += c as usize;
        }
        let r = state.apply(&cur, &s.subexpression, &call);
        if !r.modified {
            break;
        }
        cur = r.expression;
    }
    (t.steps.len(), exact, canon)
}

/// Solve every trace root with a fresh policy from `make_policy` and verify
/// the result. Expressions are processed in parallel; the report does not
/// depend on the number of threads.
pub fn evaluate_accuracy<P, F>(testset: &[Trace], make_policy: F, cfg: &SearchConfig, opts: EvalOptions) -> EvalReport
where
    P: Policy,
    F: Fn() -> P + Sync,
{
    let rows: Vec<(Attempt, (usize, usize, usize))> = testset
        .par_iter()
        .map(|t| {
            let mut policy = make_policy();
            let a = attempt(t.root(), &mut policy, cfg);
            let s = if opts.skip_steps {
                (0, 0, 0)
            } else {
                step_level(t, &mut policy, cfg.beam)
            };
            (a, s)
        })
        .collect();
    let n = rows.len();
    let solved = rows.iter().filter(|(a, _)| a.verdict.is_pass()).count();
    let inconclusive = rows
        .iter()
        .filter(|(a, _)| matches!(a.verdict, Verdict::Inconclusive(_)))
        .count();
    let p = ratio(solved, n);
    let solved_nodes: usize = rows
        .iter()
        .filter(|(a, _)| a.verdict.is_pass())
        .map(|(a, _)| a.proof.stats.nodes)
        .sum();
    let timing = if opts.timing {
        let ds: Vec<Duration> = rows.iter().map(|(a, _)| a.proof.stats.elapsed).collect();
        Timing::from_durations(&ds)
    } else {
        None
    };
    EvalReport {
        policy: make_policy().name(),
        beam: cfg.beam,
        timeout_ms: cfg.timeout.as_millis() as u64,
        attempted: n,
        solved,
        inconclusive,
        accuracy: p,
        std_error: if n == 0 { 0.0 } else { (p * (1.0 - p) / n as f64).sqrt() },
        steps: rows.iter().map(|(_, s)| s.0).sum(),
        step_match_exact: rows.iter().map(|(_, s)| s.1).sum(),
        step_match_canonical: rows.iter().map(|(_, s)| s.2).sum(),
        node_histogram: node_histogram(rows.iter().map(|(a, _)| &a.proof)),
        mean_nodes_solved: ratio(solved_nodes, solved),
        timing,
        robustness: Vec::new(),
    }
}

/// Perturbation families of the robustness table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `k1 ln(k2 x)`
    Log,
    /// `k1 x`
    Linear,
    /// `k1 x^42`
    Pow42,
    /// `k1 exp(k2 x)`
    Exp,
    /// `k1 sin(k2 x)`
    Sin,
    /// `k1 cos(k2 x)`
    Cos,
    /// `k1 tan(k2 x)`
    Tan,
    /// `f / k` for `f` from the validation suite
    Divided,
    /// `k f` for `f` from the validation suite
    Scaled,
}

impl Family {
    pub const ALL: [Family; 9] = [
        Family::Log,
        Family::Linear,
        Family::Pow42,
        Family::Exp,
        Family::Sin,
        Family::Cos,
        Family::Tan,
        Family::Divided,
        Family::Scaled,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Family::Log => "k1*ln(k2*x)",
            Family::Linear => "k1*x",
            Family::Pow42 => "k1*x^42",
            Family::Exp => "k1*exp(k2*x)",
            Family::Sin => "k1*sin(k2*x)",
            Family::Cos => "k1*cos(k2*x)",
            Family::Tan => "k1*tan(k2*x)",
            Family::Divided => "(1/k)*f",
            Family::Scaled => "k*f",
        }
    }

    /// Integrand with coefficients `k1`, `k2` (`k = k1`) and base function
    /// `f` for the two validation families.
    pub fn integrand(self, k1: i64, k2: i64, f: &Expr) -> Expr {
        let x = Expr::x();
        let kx = || mul(num(k2), x.clone());
        match self {
            Family::Log => mul(num(k1), func(Func::Log, kx())),
            Family::Linear => mul(num(k1), x),
            Family::Pow42 => mul(num(k1), pow(x, num(42))),
            Family::Exp => mul(num(k1), func(Func::Exp, kx())),
            Family::Sin => mul(num(k1), func(Func::Sin, kx())),
            Family::Cos => mul(num(k1), func(Func::Cos, kx())),
            Family::Tan => mul(num(k1), func(Func::Tan, kx())),
            Family::Divided => mul(rat(num_rational::BigRational::new(1.into(), k1.into())), f.clone()),
            Family::Scaled => mul(num(k1), f.clone()),
        }
    }
}

/// Integrands used as `f` by the validation families.
pub const VALIDATION_SUITE: [&str; 12] = [
    "x*cos(x)",
    "x*exp(x)",
    "1/cos(x)",
    "x*cosh(x)",
    "log(x)",
    "x*log(x)",
    "atan(x)",
    "x*exp(x^2)",
    "sin(x)^2*cos(x)",
    "1/(x^2 + 1)",
    "tan(x)",
    "2*cos(2*x)/sqrt(sin(2*x)^2 + 1)",
];

pub fn validation_suite() -> Vec<Expr> {
    VALIDATION_SUITE
        .iter()
        .map(|s| parse(s).expect("suite entries parse"))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessProbe {
    pub family: Family,
    /// Inclusive range of the integer coefficients.
    pub coeff_min: i64,
    pub coeff_max: i64,
    pub samples: usize,
    pub beam: usize,
    pub seed: u64,
}

impl RobustnessProbe {
    pub fn new(family: Family, samples: usize, beam: usize, seed: u64) -> RobustnessProbe {
        RobustnessProbe {
            family,
            coeff_min: 1,
            coeff_max: 50,
            samples,
            beam,
            seed,
        }
    }

    /// The `i`-th sampled integral.
    pub fn instance(&self, i: usize, validation: &[Expr]) -> Expr {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(i as u64);
        let k1 = rng.gen_range(self.coeff_min..=self.coeff_max);
        let k2 = rng.gen_range(self.coeff_min..=self.coeff_max);
        let f = if validation.is_empty() {
            Expr::x()
        } else {
            validation[rng.gen_range(0..validation.len())].clone()
        };
        Expr::integral(self.family.integrand(k1, k2, &f), Symbol::X)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailRow {
    pub family: Family,
    pub label: String,
    pub beam: usize,
    pub samples: usize,
    pub failures: usize,
    /// Percentage unsolved or not verified.
    pub fail_pct: f64,
}

/// Fail@N of one family: the percentage of sampled integrals that are not
/// solved and verified with beam `probe.beam`.
pub fn fail_at_n<P, F>(probe: &RobustnessProbe, validation: &[Expr], make_policy: F, cfg: &SearchConfig) -> FailRow
where
    P: Policy,
    F: Fn() -> P + Sync,
{
    let cfg = SearchConfig {
        beam: probe.beam,
        ..cfg.clone()
    };
    let failures = (0..probe.samples)
        .into_par_iter()
        .filter(|&i| {
            let root = probe.instance(i, validation);
            !attempt(&root, &mut make_policy(), &cfg).verdict.is_pass()
        })
        .count();
    FailRow {
        family: probe.family,
        label: probe.family.label().to_string(),
        beam: probe.beam,
        samples: probe.samples,
        failures,
        fail_pct: 100.0 * ratio(failures, probe.samples),
    }
}

/// All families with the same sample count, beam and seed.
pub fn robustness_suite<P, F>(samples: usize, validation: &[Expr], make_policy: F, cfg: &SearchConfig) -> Vec<FailRow>
where
    P: Policy,
    F: Fn() -> P + Sync,
{
    Family::ALL
        .iter()
        .map(|&f| fail_at_n(&RobustnessProbe::new(f, samples, cfg.beam, cfg.seed), validation, &make_policy, cfg))
        .collect()
}

/// Two-column table: test and Fail@N.
pub fn render_robustness(rows: &[FailRow]) -> String {
    let beam = rows.first().map_or(0, |r| r.beam);
    let header = format!("Fail@{}", beam);
    let width = rows.iter().map(|r| r.label.len()).max().unwrap_or(4).max(4);
    let mut s = format!("{:<w$}  {:>8}\n", "Test", header, w = width);
    for r in rows {
        let _ = writeln!(s, "{:<w$}  {:>8.1}", r.label, r.fail_pct, w = width);
    }
    s
}
