//! Synthetic corpus generation: random integrands, step traces from the
//! heuristic solver, by-parts augmentation, deduplication and statistics.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};
use std::time::Duration;

use num_traits::Signed;
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{encode_step_line, parse_step_line, tree_to_seq, StepRecord};
use crate::engine::parts::integrate_simple;
use crate::engine::{Action, ActionCall, EngineState};
use crate::expr::canon::{add, div, func, mul, sub};
use crate::expr::diff::differentiate;
use crate::policy::HeuristicPolicy;
use crate::search::{integrate, SearchConfig, Status, MAX_DEPTH};
use crate::{Constant, Expr, Func, Node, Symbol};

/// Functions placed on unary nodes.
pub const UNARY_FUNCS: [Func; 14] = [
    Func::Sin,
    Func::Cos,
    Func::Tan,
    Func::Asin,
    Func::Acos,
    Func::Atan,
    Func::Sinh,
    Func::Cosh,
    Func::Tanh,
    Func::Asinh,
    Func::Acosh,
    Func::Atanh,
    Func::Exp,
    Func::Log,
];

/// Largest tree the sampler supports.
pub const MAX_TREE_NODES: usize = 70;
/// Draws per expression before giving up on finding a non-degenerate one.
pub const MAX_RESAMPLES: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    /// Node counts are uniform on `3..=max_nodes`.
    pub max_nodes: usize,
    /// Probability that a leaf is `x`.
    pub leaf_symbol_prob: f64,
    /// Weights of `+ - * /`.
    pub binary_weights: [u32; 4],
    pub seed: u64,
    /// Number of expressions attempted.
    pub count: usize,
    /// Policy calls allowed per trace.
    pub trace_nodes: usize,
    /// Wall-clock guard per trace.
    pub trace_timeout: Duration,
}

impl Default for GenConfig {
    fn default() -> GenConfig {
        GenConfig {
            max_nodes: 50,
            leaf_symbol_prob: 0.75,
            binary_weights: [2, 1, 2, 1],
            seed: 0,
            count: 1000,
            trace_nodes: 12,
            trace_timeout: Duration::from_millis(500),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

const BIN_OPS: [BinOp; 4] = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div];

#[derive(Clone, Debug, PartialEq)]
pub enum Leaf {
    X,
    Pi,
    E,
    Int(u8),
}

/// A sampled tree before any simplification.
#[derive(Clone, Debug, PartialEq)]
pub enum RawTree {
    Leaf(Leaf),
    Unary(Func, Box<RawTree>),
    Binary(BinOp, Box<RawTree>, Box<RawTree>),
}

impl RawTree {
    pub fn node_count(&self) -> usize {
        match self {
            RawTree::Leaf(_) => 1,
            RawTree::Unary(_, a) => 1 + a.node_count(),
            RawTree::Binary(_, a, b) => 1 + a.node_count() + b.node_count(),
        }
    }

    pub fn leaves(&self) -> Vec<&Leaf> {
        match self {
            RawTree::Leaf(l) => vec![l],
            RawTree::Unary(_, a) => a.leaves(),
            RawTree::Binary(_, a, b) => {
                let mut v = a.leaves();
                v.extend(b.leaves());
                v
            }
        }
    }

    /// The canonical expression, or `None` if it divides by zero.
    pub fn to_expr(&self) -> Option<Expr> {
        Some(match self {
            RawTree::Leaf(Leaf::X) => Expr::x(),
            RawTree::Leaf(Leaf::Pi) => Expr::constant(Constant::Pi),
            RawTree::Leaf(Leaf::E) => Expr::constant(Constant::E),
            RawTree::Leaf(Leaf::Int(n)) => Expr::int(*n),
            RawTree::Unary(f, a) => func(*f, a.to_expr()?),
            RawTree::Binary(op, a, b) => {
                let (a, b) = (a.to_expr()?, b.to_expr()?);
                match op {
                    BinOp::Add => add(a, b),
                    BinOp::Sub => sub(a, b),
                    BinOp::Mul => mul(a, b),
                    BinOp::Div if b.is_zero() => return None,
                    BinOp::Div => div(a, b),
                }
            }
        })
        .filter(|e| !divides_by_zero(e))
    }
}

/// Literal singularities: `0^k` with `k` not positive, and `log(0)`.
fn divides_by_zero(e: &Expr) -> bool {
    e.any(&mut |n| match n.node() {
        Node::Pow(b, k) => b.is_zero() && !k.as_rational().is_some_and(|r| r.is_positive()),
        Node::Func(Func::Log, a) => a.is_zero(),
        _ => false,
    })
}

/// Number of unary-binary tree shapes with `n` nodes, for `n` up to
/// [`MAX_TREE_NODES`].
fn shape_counts() -> &'static [u128] {
    static COUNTS: std::sync::OnceLock<Vec<u128>> = std::sync::OnceLock::new();
    COUNTS.get_or_init(|| {
        let mut d = vec![0u128; MAX_TREE_NODES + 1];
        d[1] = 1;
        for n in 2..=MAX_TREE_NODES {
            let mut t = d[n - 1];
            for k in 1..n - 1 {
                t += d[k] * d[n - 1 - k];
            }
            d[n] = t;
        }
        d
    })
}

/// Uniformly random tree shape with `n` nodes, labelled per `cfg`.
pub fn sample_tree<R: Rng + ?Sized>(cfg: &GenConfig, n: usize, rng: &mut R) -> RawTree {
    assert!((1..=MAX_TREE_NODES).contains(&n));
    let d = shape_counts();
    let bin = WeightedIndex::new(cfg.binary_weights).expect("positive operator weights");
    fn build<R: Rng + ?Sized>(
        n: usize,
        d: &[u128],
        cfg: &GenConfig,
        bin: &WeightedIndex<u32>,
        rng: &mut R,
    ) -> RawTree {
        if n == 1 {
            return RawTree::Leaf(sample_leaf(cfg, rng));
        }
        let mut r = rng.gen_range(0..d[n]);
        if r < d[n - 1] {
            let f = UNARY_FUNCS[rng.gen_range(0..UNARY_FUNCS.len())];
            return RawTree::Unary(f, Box::new(build(n - 1, d, cfg, bin, rng)));
        }
        r -= d[n - 1];
        let mut k = 1;
        while r >= d[k] * d[n - 1 - k] {
            r -= d[k] * d[n - 1 - k];
            k += 1;
        }
        let op = BIN_OPS[bin.sample(rng)];
        let left = build(k, d, cfg, bin, rng);
        let right = build(n - 1 - k, d, cfg, bin, rng);
        RawTree::Binary(op, Box::new(left), Box::new(right))
    }
    build(n, d, cfg, &bin, rng)
}

fn sample_leaf<R: Rng + ?Sized>(cfg: &GenConfig, rng: &mut R) -> Leaf {
    if rng.gen_bool(cfg.leaf_symbol_prob) {
        return Leaf::X;
    }
    match rng.gen_range(0..13u8) {
        0 => Leaf::Pi,
        1 => Leaf::E,
        k => Leaf::Int(k - 2),
    }
}

/// A random raw tree with a uniformly drawn node count.
pub fn sample_raw<R: Rng + ?Sized>(cfg: &GenConfig, rng: &mut R) -> RawTree {
    let n = rng.gen_range(3..=cfg.max_nodes.clamp(3, MAX_TREE_NODES));
    sample_tree(cfg, n, rng)
}

/// A random integrand in `x`: canonical, depending on `x`, no division by
/// zero. `None` after [`MAX_RESAMPLES`] degenerate draws.
pub fn sample_expression<R: Rng + ?Sized>(cfg: &GenConfig, rng: &mut R) -> Option<Expr> {
    for _ in 0..MAX_RESAMPLES {
        if let Some(e) = sample_raw(cfg, rng).to_expr() {
            if e.has_symbol(Symbol::X) {
                return Some(e);
            }
        }
    }
    None
}

/// Random stream of the `index`-th expression of a corpus.
pub fn expression_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Error)]
#[serde(rename_all = "lowercase")]
pub enum TraceFailure {
    #[error("step or node budget exhausted")]
    Budget,
    #[error("no applicable rule")]
    NoRule,
    #[error("timeout")]
    Timeout,
}

/// A solved proof, one record per step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub steps: Vec<StepRecord>,
}

impl Trace {
    pub fn root(&self) -> &Expr {
        &self.steps[0].expression
    }
}

/// Heuristic proof of `∫ e dx` settings for corpus generation.
pub fn trace_config(cfg: &GenConfig) -> SearchConfig {
    SearchConfig {
        max_nodes: cfg.trace_nodes,
        timeout: cfg.trace_timeout,
        max_depth: MAX_DEPTH,
        ..SearchConfig::heuristic()
    }
}

/// Steps proving `root` with the heuristic policy.
pub fn trace_steps(root: &Expr, cfg: &SearchConfig) -> Result<Trace, TraceFailure> {
    let r = integrate(root, &mut HeuristicPolicy::new(), cfg);
    match r.status {
        Status::Solved if !r.steps.is_empty() => Ok(Trace { steps: r.steps }),
        Status::Solved => Err(TraceFailure::NoRule),
        Status::Timeout => Err(TraceFailure::Timeout),
        Status::Exhausted if r.stats.nodes >= cfg.max_nodes => Err(TraceFailure::Budget),
        Status::Exhausted if r.stats.max_depth + 1 >= cfg.max_depth => Err(TraceFailure::Budget),
        Status::Exhausted => Err(TraceFailure::NoRule),
    }
}

/// Replay a trace; `Some(result)` when every step applies and the result is
/// free of integrals.
pub fn replay_trace(t: &Trace) -> Option<Expr> {
    let mut state = EngineState::new();
    let mut cur = state.register(t.root());
    for s in &t.steps {
        if s.expression != cur {
            return None;
        }
        let r = state.apply(&cur, &s.subexpression, &ActionCall::new(s.rule, s.params.clone()));
        if !r.modified {
            return None;
        }
        cur = r.expression;
    }
    (!cur.has_integral()).then_some(cur)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Failure {
    pub root: Expr,
    pub reason: TraceFailure,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Corpus {
    pub traces: Vec<Trace>,
    pub failures: Vec<Failure>,
    /// Draws that never produced a usable integrand.
    pub degenerate: usize,
    /// Traces removed as duplicates.
    pub duplicates: usize,
    /// Traces added by by-parts augmentation.
    pub augmented: usize,
}

/// Generate `cfg.count` attempts in parallel. The result depends only on
/// `cfg`, not on the number of threads.
pub fn generate(cfg: &GenConfig) -> Corpus {
    let scfg = trace_config(cfg);
    let outcomes: Vec<Option<Result<Trace, Failure>>> = (0..cfg.count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = expression_rng(cfg.seed, i);
            let f = sample_expression(cfg, &mut rng)?;
            let root = Expr::integral(f, Symbol::X);
            Some(trace_steps(&root, &scfg).map_err(|reason| Failure { root, reason }))
        })
        .collect();
    let mut corpus = Corpus::default();
    for o in outcomes {
        match o {
            None => corpus.degenerate += 1,
            Some(Ok(t)) => corpus.traces.push(t),
            Some(Err(f)) => corpus.failures.push(f),
        }
    }
    corpus.duplicates = dedup(&mut corpus.traces);
    corpus.failures.sort_by_key(|f| (f.root.digest(), tree_to_seq(&f.root)));
    corpus.failures.dedup_by(|a, b| a.root == b.root);
    corpus
}

/// Sort by root digest and drop traces whose root repeats, or that share an
/// (expression, step index, rule) record with an earlier trace. Returns the
/// number removed.
pub fn dedup(traces: &mut Vec<Trace>) -> usize {
    traces.sort_by_cached_key(|t| (t.root().digest(), tree_to_seq(t.root()).join(" ")));
    let before = traces.len();
    let mut roots = HashSet::new();
    let mut records = HashSet::new();
    traces.retain(|t| {
        if !roots.insert(t.root().clone()) {
            return false;
        }
        let keys: Vec<(u64, usize, Action)> = t
            .steps
            .iter()
            .enumerate()
            .map(|(i, s)| (s.expression.digest(), i, s.rule))
            .collect();
        if keys.iter().any(|k| records.contains(k)) {
            return false;
        }
        records.extend(keys);
        true
    });
    before - traces.len()
}

/// Largest number of integrands tried on each side of a by-parts pairing.
pub const IBP_POOL: usize = 300;

/// New traces `∫ Φ ψ dx` obtained by one PartsRule step followed by the
/// known steps of `∫ Φ' V dx`, where `V = ∫ ψ dx` and `Φ`, `ψ` range over
/// integrands of the corpus. Only traces that replay are returned; roots
/// already in the corpus are skipped.
pub fn ibp_augment(traces: &[Trace]) -> Vec<Trace> {
    let mut known: HashMap<Expr, &Trace> = HashMap::new();
    for t in traces {
        known.entry(t.root().clone()).or_insert(t);
    }
    let mut integrands: Vec<Expr> = traces
        .iter()
        .filter_map(|t| match t.root().node() {
            Node::Integral(f, Symbol::X) => Some(f.clone()),
            _ => None,
        })
        .collect();
    integrands.sort_by_cached_key(|f| (f.size(), f.digest()));
    integrands.dedup();
    integrands.truncate(IBP_POOL);
    let x = Symbol::X;
    let prims: Vec<(Expr, Expr)> = integrands
        .iter()
        .filter_map(|psi| integrate_simple(psi, x).map(|v| (psi.clone(), v)))
        .collect();
    let derivs: Vec<(Expr, Expr)> = integrands
        .iter()
        .filter(|p| !p.is_free_of(x))
        .filter_map(|p| differentiate(p, x).ok().map(|d| (p.clone(), d)))
        .filter(|(_, d)| !d.is_zero())
        .collect();
    let mut seen: HashSet<Expr> = known.keys().cloned().collect();
    let mut out = Vec::new();
    for (big_phi, phi) in &derivs {
        for (psi, v) in &prims {
            let lower = Expr::integral(mul(phi.clone(), v.clone()), x);
            let Some(base) = known.get(&lower) else { continue };
            let root = Expr::integral(mul(big_phi.clone(), psi.clone()), x);
            if seen.contains(&root) {
                continue;
            }
            if let Some(t) = lift_by_parts(&root, big_phi, psi, base) {
                seen.insert(root);
                out.push(t);
            }
        }
    }
    out
}

fn lift_by_parts(root: &Expr, u: &Expr, dv: &Expr, base: &Trace) -> Option<Trace> {
    let mut state = EngineState::new();
    let mut cur = state.register(root);
    let mut steps = Vec::with_capacity(base.steps.len() + 1);
    let first = ActionCall::new(Action::Parts, vec![u.clone(), dv.clone()]);
    let mut calls = vec![(root.clone(), first)];
    calls.extend(
        base.steps
            .iter()
            .map(|s| (s.subexpression.clone(), ActionCall::new(s.rule, s.params.clone()))),
    );
    for (g, call) in calls {
        let r = state.apply(&cur, &g, &call);
        if !r.modified || r.revisited {
            return None;
        }
        steps.push(StepRecord {
            expression: cur.clone(),
            subexpression: g,
            rule: call.action,
            params: call.params,
        });
        cur = r.expression;
    }
    (!cur.has_integral()).then_some(Trace { steps })
}

/// Append augmented traces and deduplicate again.
pub fn augment(corpus: &mut Corpus) {
    let extra = ibp_augment(&corpus.traces);
    let before = corpus.traces.len();
    corpus.traces.extend(extra);
    corpus.duplicates += dedup(&mut corpus.traces);
    corpus.augmented = corpus.traces.len() - before;
}

/// Traces as step lines, one blank line after each trace.
pub fn write_dataset<W: Write>(w: &mut W, traces: &[Trace]) -> std::io::Result<()> {
    for t in traces {
        for s in &t.steps {
            writeln!(w, "{}", encode_step_line(s))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Unsolved integrals, one per line: reason, a tab, the prefix tokens.
pub fn write_failures<W: Write>(w: &mut W, failures: &[Failure]) -> std::io::Result<()> {
    for f in failures {
        let reason = serde_json::to_value(f.reason).expect("enum serializes");
        writeln!(w, "{}\t{}", reason.as_str().unwrap_or("unknown"), tree_to_seq(&f.root).join(" "))?;
    }
    Ok(())
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Read a dataset written by [`write_dataset`]. Blank lines end a trace.
pub fn read_dataset<R: BufRead>(r: R) -> Result<Vec<Trace>, DatasetError> {
    let mut traces = Vec::new();
    let mut cur: Vec<StepRecord> = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            if !cur.is_empty() {
                traces.push(Trace {
                    steps: std::mem::take(&mut cur),
                });
            }
            continue;
        }
        let step = parse_step_line(&line).map_err(|e| DatasetError::Malformed {
            line: i + 1,
            message: e.to_string(),
        })?;
        cur.push(step);
    }
    if !cur.is_empty() {
        traces.push(Trace { steps: cur });
    }
    Ok(traces)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub expressions: usize,
    pub steps: usize,
    /// Mean prefix length of the root integrals.
    pub mean_tokens: f64,
    pub mean_steps: f64,
    pub min_steps: usize,
    pub max_steps: usize,
}

pub fn dataset_stats(traces: &[Trace]) -> DatasetStats {
    if traces.is_empty() {
        return DatasetStats::default();
    }
    let n = traces.len();
    let steps: Vec<usize> = traces.iter().map(|t| t.steps.len()).collect();
    let tokens: usize = traces.iter().map(|t| tree_to_seq(t.root()).len()).sum();
    let total: usize = steps.iter().sum();
    DatasetStats {
        expressions: n,
        steps: total,
        mean_tokens: tokens as f64 / n as f64,
        mean_steps: total as f64 / n as f64,
        min_steps: *steps.iter().min().expect("non-empty"),
        max_steps: *steps.iter().max().expect("non-empty"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse;

    #[test]
    fn shape_counts_are_motzkin_numbers() {
        assert_eq!(&shape_counts()[1..9], &[1, 1, 2, 4, 9, 21, 51, 127]);
        assert!(shape_counts()[50] > 0);
    }

    #[test]
    fn sampled_trees_have_the_requested_size() {
        let cfg = GenConfig::default();
        let mut rng = expression_rng(1, 0);
        for n in [1, 3, 10, 50] {
            assert_eq!(sample_tree(&cfg, n, &mut rng).node_count(), n);
        }
    }

    #[test]
    fn trace_for_cosine_of_shifted_argument() {
        let root = parse("Integral(cos(x + tan(2) + E), x)").unwrap();
        let t = trace_steps(&root, &SearchConfig::heuristic()).unwrap();
        assert_eq!(t.steps.len(), 2);
        assert_eq!(t.steps[0].rule, Action::U);
        assert_eq!(t.steps[1].rule, Action::Cos);
        assert_eq!(replay_trace(&t).unwrap(), parse("sin(x + tan(2) + E)").unwrap());
        let one = trace_steps(&parse("Integral(1, x)").unwrap(), &SearchConfig::heuristic()).unwrap();
        assert_eq!(one.steps.len(), 1);
        assert_eq!(one.steps[0].rule, Action::Constant);
    }

    #[test]
    fn parts_lift_of_sine() {
        let base = trace_steps(&parse("Integral(sin(x), x)").unwrap(), &SearchConfig::heuristic()).unwrap();
        let cos = trace_steps(&parse("Integral(cos(x), x)").unwrap(), &SearchConfig::heuristic()).unwrap();
        let x = trace_steps(&parse("Integral(x, x)").unwrap(), &SearchConfig::heuristic()).unwrap();
        let out = ibp_augment(&[base, cos, x]);
        let want = parse("Integral(x*cos(x), x)").unwrap();
        let t = out.iter().find(|t| *t.root() == want).expect("x cos x lifted");
        assert_eq!(t.steps[0].rule, Action::Parts);
        assert_eq!(t.steps[0].params, vec![parse("x").unwrap(), parse("cos(x)").unwrap()]);
        assert!(replay_trace(t).is_some());
    }

    #[test]
    fn dataset_round_trip_and_stats() {
        let t = trace_steps(&parse("Integral(x*cosh(x), x)").unwrap(), &SearchConfig::heuristic()).unwrap();
        let mut buf = Vec::new();
        write_dataset(&mut buf, std::slice::from_ref(&t)).unwrap();
        let back = read_dataset(&buf[..]).unwrap();
        assert_eq!(back, vec![t.clone()]);
        let s = dataset_stats(&back);
        assert_eq!((s.expressions, s.steps, s.min_steps, s.max_steps), (1, 2, 2, 2));
        assert_eq!(dataset_stats(&[]), DatasetStats::default());
        let err = read_dataset(&b"\nSTART x END\n"[..]).unwrap_err();
        assert!(err.to_string().starts_with("line 2"));
    }
}
