//! Greedy depth-first proof search driven by a policy.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::codec::StepRecord;
use crate::engine::{ActionCall, EngineState};
use crate::policy::{Policy, PolicyError};
use crate::Expr;

/// Longest proof branch.
pub const MAX_DEPTH: usize = 64;
pub const DEFAULT_BEAM: usize = 5;
pub const HEURISTIC_TIMEOUT: Duration = Duration::from_secs(120);
pub const LEARNED_TIMEOUT: Duration = Duration::from_secs(10);
pub const DEFAULT_MAX_NODES: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Candidates requested per node.
    pub beam: usize,
    pub timeout: Duration,
    pub max_nodes: usize,
    pub max_depth: usize,
    /// Seed for tie-breaking. Candidates with equal log-probability keep the
    /// order in which the policy emitted them, so no randomness is drawn.
    pub seed: u64,
}

impl SearchConfig {
    /// Settings used with the heuristic policy.
    pub fn heuristic() -> SearchConfig {
        SearchConfig {
            beam: DEFAULT_BEAM,
            timeout: HEURISTIC_TIMEOUT,
            max_nodes: DEFAULT_MAX_NODES,
            max_depth: MAX_DEPTH,
            seed: 0,
        }
    }

    /// Settings used with an external (learned) policy.
    pub fn learned() -> SearchConfig {
        SearchConfig {
            timeout: LEARNED_TIMEOUT,
            ..SearchConfig::heuristic()
        }
    }
}

impl Default for SearchConfig {
    fn default() -> SearchConfig {
        SearchConfig::heuristic()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Solved,
    Timeout,
    Exhausted,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    /// Distinct expressions on which the policy was called.
    pub nodes: usize,
    pub policy_calls: usize,
    /// Candidates the policy sent that did not parse or did not apply.
    pub invalid: usize,
    pub max_depth: usize,
    pub transport_errors: usize,
    pub elapsed: Duration,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProofResult {
    pub status: Status,
    /// The integral-free result when solved, otherwise the input.
    pub expression: Expr,
    pub steps: Vec<StepRecord>,
    pub stats: SearchStats,
}

impl ProofResult {
    pub fn solved(&self) -> bool {
        self.status == Status::Solved
    }
}

enum Stop {
    Timeout,
    Budget,
}

struct Search<'a, P: Policy + ?Sized> {
    policy: &'a mut P,
    cfg: &'a SearchConfig,
    state: EngineState,
    expanded: HashSet<Expr>,
    stats: SearchStats,
    start: Instant,
    path: Vec<StepRecord>,
}

impl<P: Policy + ?Sized> Search<'_, P> {
    fn out_of_time(&self) -> bool {
        self.start.elapsed() >= self.cfg.timeout
    }

    /// `Ok(Some(final))` when solved below `e`, `Ok(None)` when this branch
    /// is exhausted.
    fn dfs(&mut self, e: &Expr, depth: usize) -> Result<Option<Expr>, Stop> {
        if !e.has_integral() {
            return Ok(Some(e.clone()));
        }
        if depth >= self.cfg.max_depth || !self.expanded.insert(e.clone()) {
            return Ok(None);
        }
        if self.stats.nodes >= self.cfg.max_nodes {
            return Err(Stop::Budget);
        }
        if self.out_of_time() {
            return Err(Stop::Timeout);
        }
        self.stats.nodes += 1;
        self.stats.policy_calls += 1;
        self.stats.max_depth = self.stats.max_depth.max(depth);
        let subs = self.state.substitutions(e).to_vec();
        let mut cands = match self.policy.propose(e, &subs, self.cfg.beam) {
            Ok(p) => {
                self.stats.invalid += p.invalid;
                p.candidates
            }
            Err(err) => {
                log::warn!("policy failed: {}", err);
                self.stats.transport_errors += 1;
                if matches!(err, PolicyError::Deadline)
                    || matches!(err, PolicyError::Transport(_)) && self.out_of_time()
                {
                    return Err(Stop::Timeout);
                }
                Vec::new()
            }
        };
        cands.truncate(self.cfg.beam);
        cands.sort_by(|a, b| b.logprob.total_cmp(&a.logprob));
        for c in cands {
            if self.out_of_time() {
                return Err(Stop::Timeout);
            }
            let r = self.state.apply(e, &c.subexpr, &c.call);
            if !r.modified {
                self.stats.invalid += 1;
                continue;
            }
            if r.revisited {
                continue;
            }
            self.path.push(step(e, &c.subexpr, &c.call));
            if let Some(done) = self.dfs(&r.expression, depth + 1)? {
                return Ok(Some(done));
            }
            self.path.pop();
        }
        Ok(None)
    }
}

fn step(e: &Expr, g: &Expr, call: &ActionCall) -> StepRecord {
    StepRecord {
        expression: e.clone(),
        subexpression: crate::expr::canonicalize(g),
        rule: call.action,
        params: call.params.clone(),
    }
}

/// Search for a proof that removes every integral from `e`.
pub fn integrate<P: Policy + ?Sized>(e: &Expr, policy: &mut P, cfg: &SearchConfig) -> ProofResult {
    let mut s = Search {
        policy,
        cfg,
        state: EngineState::new(),
        expanded: HashSet::new(),
        stats: SearchStats::default(),
        start: Instant::now(),
        path: Vec::new(),
    };
    s.policy.set_deadline(s.start.checked_add(cfg.timeout));
    let root = s.state.register(e);
    let outcome = s.dfs(&root, 0);
    let mut stats = s.stats;
    stats.elapsed = s.start.elapsed();
    let (status, expression, steps) = match outcome {
        Ok(Some(done)) => (Status::Solved, done, s.path),
        Ok(None) | Err(Stop::Budget) => (Status::Exhausted, root, Vec::new()),
        Err(Stop::Timeout) => (Status::Timeout, root, Vec::new()),
    };
    ProofResult {
        status,
        expression,
        steps,
        stats,
    }
}

/// Replay `steps` from `start` through a fresh engine. `None` if some step
/// does not apply or does not start from the expression it records.
pub fn replay(start: &Expr, steps: &[StepRecord]) -> Option<Expr> {
    let mut state = EngineState::new();
    let mut cur = state.register(start);
    for s in steps {
        if s.expression != cur {
            return None;
        }
        let r = state.apply(&cur, &s.subexpression, &ActionCall::new(s.rule, s.params.clone()));
        if !r.modified {
            return None;
        }
        cur = r.expression;
    }
    Some(cur)
}

/// One line per rewrite, e.g. `Integral(sin(x), x)  [SinRule]  -> -cos(x)`.
pub fn render(result: &ProofResult) -> String {
    let mut out = String::new();
    let mut results: Vec<&Expr> = result.steps.iter().skip(1).map(|s| &s.expression).collect();
    results.push(&result.expression);
    for (s, next) in result.steps.iter().zip(results) {
        let params: Vec<String> = s.params.iter().map(|p| p.to_string()).collect();
        let _ = write!(out, "{}\n    {} on {}", s.expression, s.rule, s.subexpression);
        if !params.is_empty() {
            let _ = write!(out, " with {}", params.join(", "));
        }
        let _ = writeln!(out, "\n    = {}", next);
    }
    out
}

/// Histogram of explored node counts.
pub fn node_histogram<'a, I: IntoIterator<Item = &'a ProofResult>>(results: I) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for r in results {
        *h.entry(r.stats.nodes).or_insert(0) += 1;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse;
    use crate::policy::HeuristicPolicy;

    #[test]
    fn single_table_step_uses_one_node() {
        let r = integrate(&parse("Integral(cos(x), x)").unwrap(), &mut HeuristicPolicy::new(), &SearchConfig::default());
        assert!(r.solved());
        assert_eq!(r.expression, parse("sin(x)").unwrap());
        assert_eq!(r.stats.nodes, 1);
        assert_eq!(r.steps.len(), 1);
    }

    #[test]
    fn no_action_means_exhausted() {
        let cfg = SearchConfig {
            beam: 1,
            ..SearchConfig::default()
        };
        let r = integrate(&parse("Integral(exp(exp(x)) * erf(x), x)").unwrap(), &mut HeuristicPolicy::new(), &cfg);
        assert_eq!(r.status, Status::Exhausted);
        assert!(r.stats.nodes >= 1);
    }

    #[test]
    fn integral_free_input_is_solved_immediately() {
        let r = integrate(&parse("x^2").unwrap(), &mut HeuristicPolicy::new(), &SearchConfig::default());
        assert!(r.solved());
        assert_eq!(r.stats.nodes, 0);
    }
}
