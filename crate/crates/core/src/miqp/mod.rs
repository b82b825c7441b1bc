//! Exact solution of the restricted ISL minimization over a free-variable
//! subset, by branch-and-bound on the MIQP model or by exhaustive search.

mod bnb;
mod bound;
mod exhaustive;
mod model;

pub use bnb::{branching_order, solve_bnb, BnbConfig, BoundKind, MAX_BNB_VARS};
pub use bound::{
    interval_term_bound, lower_bound_interval, lower_bound_polynomial, lower_bound_relaxation, BnbNode,
    RelaxationBound, RELAXATION_TOLERANCE,
};
pub use exhaustive::{solve_exhaustive, DEFAULT_EXHAUSTIVE_CAP};
pub use model::{glover_interval, glover_link, Aux, MiqpSubproblem, Polynomial, Term};

use serde::{Deserialize, Serialize};

use crate::sequence::Flip;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveStatus {
    /// The returned objective is the global minimum over all completions.
    Optimal,
    /// The time limit was hit; the result is the best assignment found.
    Timeout,
}

/// Result of a subproblem solve. `assignment` is indexed in `S` order.
#[derive(Clone, Debug)]
pub struct Solution {
    pub assignment: Vec<i8>,
    pub objective: i64,
    pub status: SolveStatus,
    /// Bound evaluations (branch-and-bound) or completions visited (exhaustive).
    pub nodes: u64,
    /// Incumbent minus the best open bound when timed out, else 0.
    pub gap: i64,
    /// Every evaluated node, when recording was requested.
    pub emitted: Vec<BnbNode>,
    pub relaxation_fallbacks: u64,
}

impl Solution {
    /// The assignment as flips against the subproblem's free entries.
    pub fn flips(&self, sub: &MiqpSubproblem<'_>) -> Vec<Flip> {
        sub.vars().iter().zip(&self.assignment).map(|(&at, &value)| Flip::new(at, value)).collect()
    }
}
