//! Maximal-length sequences from Fibonacci linear feedback shift registers.

use crate::error::{usage, Error, Result};
use crate::sequence::bit_to_chip;

/// Largest supported register degree.
pub const MAX_DEGREE: u32 = 30;

/// A binary LFSR producing `a[t] = XOR_{p in taps} a[t - p]`.
///
/// `seed` holds the first `degree` output bits, `a[m]` in bit `m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LfsrSpec {
    pub degree: u32,
    pub taps: Vec<u32>,
    pub seed: u64,
}

impl LfsrSpec {
    /// Register seeded with all ones.
    pub fn new(degree: u32, taps: Vec<u32>) -> Self {
        let seed = (1u64 << degree) - 1;
        Self { degree, taps, seed }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Period of a maximal-length sequence of this degree, `2^n - 1`.
    pub fn period(&self) -> usize {
        (1usize << self.degree) - 1
    }

    fn validate(&self) -> Result<()> {
        let n = self.degree;
        if !(2..=MAX_DEGREE).contains(&n) {
            return Err(usage(format!("LFSR degree must be in 2..={MAX_DEGREE}, got {n}")));
        }
        if !self.taps.contains(&n) {
            return Err(usage(format!("taps {:?} must include the degree {n}", self.taps)));
        }
        if self.taps.iter().any(|&p| p == 0 || p > n) {
            return Err(usage(format!("taps {:?} must lie in 1..={n}", self.taps)));
        }
        let mask = (1u64 << n) - 1;
        if self.seed & mask == 0 || self.seed & !mask != 0 {
            return Err(usage(format!("seed {:#x} must be a nonzero {n}-bit value", self.seed)));
        }
        Ok(())
    }

    /// Output bits of one full period. Fails unless the register cycles with
    /// period exactly `2^n - 1`, i.e. unless the feedback polynomial is
    /// primitive.
    pub fn bits(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let n = self.degree;
        let period = self.period();
        // window bit r holds a[t + r]; feedback reads a[t + n - p]
        let feedback: u64 = self.taps.iter().fold(0, |acc, &p| acc ^ (1 << (n - p)));
        let mut window = self.seed;
        let mut out = Vec::with_capacity(period);
        for t in 0..period {
            if t > 0 && window == self.seed {
                return Err(Error::Generation(format!(
                    "taps {:?} are not primitive: period {t} instead of {period}",
                    self.taps
                )));
            }
            out.push((window & 1) as u8);
            let next = (window & feedback).count_ones() as u64 & 1;
            window = (window >> 1) | (next << (n - 1));
        }
        if window != self.seed {
            return Err(Error::Generation(format!("taps {:?} do not generate a periodic sequence", self.taps)));
        }
        Ok(out)
    }
}

/// One period of the m-sequence as chips (`0 -> +1`, `1 -> -1`).
pub fn generate_mseq(spec: &LfsrSpec) -> Result<Vec<i8>> {
    Ok(spec.bits()?.into_iter().map(bit_to_chip).collect())
}

/// Primitive trinomial/pentanomial taps for degrees 2..=10, used for
/// stand-alone m-sequence generation.
pub fn default_taps(degree: u32) -> Option<Vec<u32>> {
    let taps: &[u32] = match degree {
        2 => &[2, 1],
        3 => &[3, 2],
        4 => &[4, 3],
        5 => &[5, 3],
        6 => &[6, 5],
        7 => &[7, 6],
        8 => &[8, 6, 5, 4],
        9 => &[9, 5],
        10 => &[10, 7],
        _ => return None,
    };
    Some(taps.to_vec())
}
