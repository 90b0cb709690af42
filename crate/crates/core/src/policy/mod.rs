//! Policies propose ranked actions for an expression: the built-in heuristic
//! and a client for an external policy server.

mod heuristic;
pub mod wire;

use std::time::Instant;

use thiserror::Error;

use crate::engine::{ActionCall, Substitution};
use crate::Expr;

pub use heuristic::{heuristic_propose, heuristic_propose_until, target_integral, HeuristicPolicy, MAX_PARTS_CANDIDATES};
pub use wire::{ExternalPolicy, PolicyAddr, PolicyRequest, PolicyResponse, WireCandidate};

/// A proposed action on a subexpression.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyCandidate {
    pub subexpr: Expr,
    pub call: ActionCall,
    /// Log-probability, `<= 0`; only the order matters.
    pub logprob: f64,
}

/// Candidates from one policy call plus the number of proposals that were
/// dropped as malformed.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Proposal {
    pub candidates: Vec<PolicyCandidate>,
    pub invalid: usize,
}

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("transport: {0}")]
    Transport(#[from] std::io::Error),
    #[error("malformed frame: {0}")]
    Frame(String),
    #[error("no answer before the search deadline")]
    Deadline,
    #[error("unsupported protocol version {0}")]
    Version(u32),
    #[error("bad policy address '{0}'")]
    Address(String),
}

pub trait Policy {
    /// Up to `n` candidates for `e`, whose open substitutions are `subs`.
    fn propose(&mut self, e: &Expr, subs: &[Substitution], n: usize) -> Result<Proposal, PolicyError>;

    fn name(&self) -> String;

    /// Time after which answers are useless. Policies may return early,
    /// with fewer candidates, once it has passed.
    fn set_deadline(&mut self, _deadline: Option<Instant>) {}
}
