//! Baseline and initial sequence sets: m-sequences, Gold families and seeded
//! random sets.
//!
//! Randomness comes from [`rand_chacha::ChaCha8Rng`] seeded with
//! `seed_from_u64`, so every generator is reproducible from its seed.

mod gold;
mod lfsr;

pub use gold::{
    generate_gold_family, gold_correlation_values, gold_t, preferred_pair, sample_best_gold_subset,
    supported_degrees, to_bits, GoldFamily, GoldSample,
};
pub use lfsr::{default_taps, generate_mseq, LfsrSpec, MAX_DEGREE};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::sequence::SequenceSet;

/// The generator used everywhere a seed is accepted.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// An `L x K` set of i.i.d. uniform chips.
pub fn random_set(length: usize, count: usize, seed: u64) -> Result<SequenceSet> {
    let mut rng = seeded_rng(seed);
    let chips = (0..length * count).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
    SequenceSet::new(length, count, chips)
}
