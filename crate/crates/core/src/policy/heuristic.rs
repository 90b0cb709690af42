//! The built-in heuristic policy. Its ranking is frozen: datasets generated
//! with it depend on the exact order below.
//!
//! Only the leftmost innermost integral is considered. Candidates come in
//! tiers, each tier in table order:
//!
//! 1. table rules;
//! 2. substitutions after which the integral closes by table rules,
//!    linearity and affine changes of variable;
//! 3. AddRule and ConstantTimesRule;
//! 4. the remaining substitutions that need no inversion, except affine ones;
//! 5. integration by parts, at most [`MAX_PARTS_CANDIDATES`], only when the
//!    new integral is no larger than the old one (about twice as large is
//!    allowed when `u'` and `dv` are algebraic, as for `∫atan x dx`);
//! 6. rewrites (function rewrites on nodes of the integrand in pre-order;
//!    Cos1Rule, Sec1Rule and Csc1Rule only when the node is the whole
//!    integrand up to a constant factor);
//! 7. the remaining substitutions that need inversion, except affine ones.
//!
//! Candidates whose result is larger than [`max_result_size`] allows are
//! dropped. Substitutions that leave `f(g(..))` with `g` an inverse of `f` are never
//! proposed.
//!
//! Every candidate is dry-run through the engine first, so all returned
//! candidates are valid. The log-probability of the `k`-th candidate is `-k`.

use std::time::Instant;

use crate::engine::parts::{integrate_simple, pairings, parts};
use crate::engine::rewrite::rewrite_function;
use crate::engine::table::split_constant;
use crate::engine::usub::{candidates, fresh_symbol, has_unsimplified_inverse, u_substitute};
use crate::engine::{apply_pure, used_symbols, Action, ActionCall, Substitution};
use crate::expr::canon::factors;
use crate::expr::canonicalize;
use crate::expr::diff::differentiate;
use crate::poly::affine;
use crate::{Expr, Node};

use super::{Policy, PolicyCandidate, PolicyError, Proposal};

/// Largest number of by-parts candidates per call.
pub const MAX_PARTS_CANDIDATES: usize = 4;

/// Largest expression a candidate may produce from an expression of size `n`.
pub fn max_result_size(n: usize) -> usize {
    (3 * n + 48).min(1500)
}

/// The integral the heuristic works on: the first in pre-order whose
/// integrand contains no integral.
pub fn target_integral(e: &Expr) -> Option<Expr> {
    e.integrals().into_iter().find(|g| match g.node() {
        Node::Integral(b, _) => !b.has_integral(),
        _ => false,
    })
}

struct Collector<'a> {
    f: &'a Expr,
    subs: &'a [Substitution],
    n: usize,
    deadline: Option<Instant>,
    out: Vec<(Expr, ActionCall)>,
}

impl Collector<'_> {
    fn full(&self) -> bool {
        self.out.len() >= self.n || self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn push(&mut self, target: &Expr, call: ActionCall) {
        if self.full() || self.out.iter().any(|(t, c)| t == target && *c == call) {
            return;
        }
        match apply_pure(self.f, target, &call, self.subs) {
            Some((r, _)) if r.size() <= max_result_size(self.f.size()) => self.out.push((target.clone(), call)),
            _ => {}
        }
    }
}

/// Ranked candidates for `e`; a pure function of its arguments.
pub fn heuristic_propose(e: &Expr, subs: &[Substitution], n: usize) -> Vec<PolicyCandidate> {
    heuristic_propose_until(e, subs, n, None)
}

/// [`heuristic_propose`], cut short at `deadline`. The result is then a
/// prefix of the full ranking.
pub fn heuristic_propose_until(
    e: &Expr,
    subs: &[Substitution],
    n: usize,
    deadline: Option<Instant>,
) -> Vec<PolicyCandidate> {
    let e = canonicalize(e);
    let Some(g) = target_integral(&e) else { return Vec::new() };
    let mut c = Collector {
        f: &e,
        subs,
        n,
        deadline,
        out: Vec::new(),
    };
    rank(&mut c, &g);
    c.out
        .into_iter()
        .enumerate()
        .map(|(k, (subexpr, call))| PolicyCandidate {
            subexpr,
            call,
            logprob: 0.0 - k as f64,
        })
        .collect()
}

fn rank(c: &mut Collector<'_>, g: &Expr) {
    let Node::Integral(body, x) = g.node() else { return };
    let (body, x) = (body.clone(), *x);

    for a in Action::ALL.into_iter().filter(|a| a.is_table()) {
        c.push(g, ActionCall::bare(a));
    }
    if c.full() {
        return;
    }

    let y = fresh_symbol(&used_symbols(c.f, c.subs));
    let mut clean = Vec::new();
    let mut inverted = Vec::new();
    if let Some(y) = y {
        for s in candidates(&body, x) {
            if c.full() {
                return;
            }
            let Some(r) = u_substitute(&body, x, y, &s) else { continue };
            let Node::Integral(nb, _) = r.integral.node() else { continue };
            if has_unsimplified_inverse(nb) {
                continue;
            }
            if integrate_simple(nb, y).is_some() {
                c.push(g, u_call(y, &s));
            } else if affine(&s, x).is_some() {
                continue;
            } else if r.inverted {
                inverted.push(s);
            } else {
                clean.push(s);
            }
        }
    }
    if c.full() {
        return;
    }

    c.push(g, ActionCall::bare(Action::Add));
    let (k, _) = split_constant(&body, x);
    c.push(g, ActionCall::new(Action::ConstantTimes, vec![k]));

    if let Some(y) = y {
        for s in &clean {
            c.push(g, u_call(y, s));
        }
    }
    if c.full() {
        return;
    }

    let several = factors(&body).len() > 1;
    let mut taken = 0;
    for (u, dv) in pairings(&body, x) {
        if taken >= MAX_PARTS_CANDIDATES || c.full() {
            break;
        }
        if several && dv.is_free_of(x) {
            continue;
        }
        let Some(r) = parts(&body, x, &u, &dv) else { continue };
        let limit = if algebraic_pairing(&u, &dv, x) { 2 * g.size() + 4 } else { g.size() };
        if r.integrals().iter().any(|i| i.size() > limit) {
            continue;
        }
        let before = c.out.len();
        c.push(g, ActionCall::new(Action::Parts, vec![u, dv]));
        taken += c.out.len() - before;
    }

    for a in Action::ALL {
        if c.full() {
            return;
        }
        if a.targets_function() {
            let whole_only = matches!(a, Action::Cos1 | Action::Sec1 | Action::Csc1);
            let (_, rest) = split_constant(&body, x);
            let mut nodes: Vec<Expr> = Vec::new();
            body.walk(&mut |n| {
                if !nodes.contains(n) && (!whole_only || *n == rest) && rewrite_function(a, n).is_some() {
                    nodes.push(n.clone());
                }
            });
            for n in nodes {
                c.push(&n, ActionCall::bare(a));
            }
        } else if is_integrand_rewrite(a) {
            c.push(g, ActionCall::bare(a));
        }
    }

    if let Some(y) = y {
        for s in &inverted {
            c.push(g, u_call(y, s));
        }
    }
}

fn algebraic_pairing(u: &Expr, dv: &Expr, x: crate::Symbol) -> bool {
    let algebraic = |e: &Expr| !e.any(&mut |n| matches!(n.node(), Node::Func(..)));
    algebraic(dv) && differentiate(u, x).is_ok_and(|d| algebraic(&d))
}

fn u_call(y: crate::Symbol, s: &Expr) -> ActionCall {
    ActionCall::new(Action::U, vec![Expr::symbol(y), s.clone()])
}

fn is_integrand_rewrite(a: Action) -> bool {
    !a.is_table()
        && !a.targets_function()
        && !matches!(a, Action::ConstantTimes | Action::Add | Action::U | Action::Parts)
}

/// The heuristic as a [`Policy`].
#[derive(Clone, Copy, Debug, Default)]
pub struct HeuristicPolicy {
    deadline: Option<Instant>,
}

impl HeuristicPolicy {
    pub fn new() -> HeuristicPolicy {
        HeuristicPolicy::default()
    }
}

impl Policy for HeuristicPolicy {
    fn propose(&mut self, e: &Expr, subs: &[Substitution], n: usize) -> Result<Proposal, PolicyError> {
        Ok(Proposal {
            candidates: heuristic_propose_until(e, subs, n, self.deadline),
            invalid: 0,
        })
    }

    fn set_deadline(&mut self, deadline: Option<Instant>) {
        self.deadline = deadline;
    }

    fn name(&self) -> String {
        "heuristic".to_string()
    }
}
