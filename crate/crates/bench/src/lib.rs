//! Shared fixtures for the benchmarks.

use seqopt_core::bcd::{run, select_subset, BcdConfig};
use seqopt_core::codegen::{random_set, seeded_rng};
use seqopt_core::{Coord, CorrelationState, SequenceSet};

/// A BiST fixed point of a random `L x K` set.
pub fn converged_set(length: usize, count: usize, seed: u64) -> SequenceSet {
    let x0 = random_set(length, count, seed).expect("valid shape");
    run(&x0, &BcdConfig::bist(seed)).expect("descent").sequences
}

/// `trials` subsets of size `n` drawn as the descent loop draws them.
pub fn subsets(state: &CorrelationState, n: usize, trials: usize, seed: u64) -> Vec<Vec<Coord>> {
    let x = state.sequences();
    let (l, k) = (x.length(), x.num_codes());
    let mut rng = seeded_rng(seed);
    (0..trials)
        .map(|t| select_subset(t * 7 % l, t % k, n, l, k, &mut rng).expect("subset fits"))
        .collect()
}
