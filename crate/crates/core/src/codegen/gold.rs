//! Gold code families built from preferred pairs of m-sequences, and the
//! best-of-random-subsets baseline.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Deserialize;

use super::lfsr::LfsrSpec;
use crate::correlation::CorrelationTable;
use crate::error::{usage, Error, Result};
use crate::sequence::{chip_to_bit, bit_to_chip, SequenceSet};

const PREFERRED_PAIRS: &str = include_str!("../../data/preferred_pairs.toml");

#[derive(Deserialize)]
struct PairTable {
    version: u32,
    pair: Vec<PairEntry>,
}

#[derive(Deserialize)]
struct PairEntry {
    degree: u32,
    taps_u: Vec<u32>,
    taps_v: Vec<u32>,
}

/// Degrees with a shipped preferred pair.
pub fn supported_degrees() -> Vec<u32> {
    pair_table().map(|t| t.pair.iter().map(|p| p.degree).collect()).unwrap_or_default()
}

fn pair_table() -> Result<PairTable> {
    let table: PairTable =
        toml::from_str(PREFERRED_PAIRS).map_err(|e| Error::Generation(format!("preferred pair table: {e}")))?;
    if table.version != 1 {
        return Err(Error::Generation(format!("unsupported preferred pair table version {}", table.version)));
    }
    Ok(table)
}

/// The preferred pair of LFSRs for `degree`, both seeded with all ones.
pub fn preferred_pair(degree: u32) -> Result<(LfsrSpec, LfsrSpec)> {
    let table = pair_table()?;
    let entry = table.pair.into_iter().find(|p| p.degree == degree).ok_or_else(|| {
        usage(format!(
            "no Gold preferred pair for degree {degree}; supported degrees: {:?}",
            supported_degrees()
        ))
    })?;
    Ok((LfsrSpec::new(degree, entry.taps_u), LfsrSpec::new(degree, entry.taps_v)))
}

/// `t(n)`: the magnitude of the large Gold correlation value.
pub fn gold_t(degree: u32) -> i64 {
    if degree.is_multiple_of(2) {
        (1 << ((degree + 2) / 2)) + 1
    } else {
        (1 << degree.div_ceil(2)) + 1
    }
}

/// The three values `{-1, -t(n), t(n) - 2}` that Gold correlations may take.
pub fn gold_correlation_values(degree: u32) -> [i64; 3] {
    let t = gold_t(degree);
    [-t, -1, t - 2]
}

/// A Gold family: `u`, `v` and `u XOR shift^d(v)` for `d = 0..L`.
#[derive(Clone, Debug)]
pub struct GoldFamily {
    pub degree: u32,
    pub u: LfsrSpec,
    pub v: LfsrSpec,
    /// All `2^n + 1` codes as the columns of one set.
    pub codes: SequenceSet,
}

impl GoldFamily {
    pub fn len(&self) -> usize {
        self.codes.num_codes()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn length(&self) -> usize {
        self.codes.length()
    }

    /// Set made of the codes at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<SequenceSet> {
        if indices.iter().any(|&i| i >= self.len()) {
            return Err(usage("Gold code index out of range"));
        }
        let cols: Vec<&[i8]> = indices.iter().map(|&i| self.codes.column(i)).collect();
        SequenceSet::from_columns(&cols)
    }
}

/// Generates the Gold family of degree `n` from the shipped preferred pair.
pub fn generate_gold_family(degree: u32) -> Result<GoldFamily> {
    if degree.is_multiple_of(4) {
        return Err(usage(format!("Gold families need n not divisible by 4, got {degree}")));
    }
    let (u, v) = preferred_pair(degree)?;
    let ub = u.bits()?;
    let vb = v.bits()?;
    let len = ub.len();
    let mut chips = Vec::with_capacity(len * (len + 2));
    chips.extend(ub.iter().map(|&b| bit_to_chip(b)));
    chips.extend(vb.iter().map(|&b| bit_to_chip(b)));
    for d in 0..len {
        chips.extend((0..len).map(|m| bit_to_chip(ub[m] ^ vb[(m + d) % len])));
    }
    let codes = SequenceSet::new(len, len + 2, chips)?;
    Ok(GoldFamily { degree, u, v, codes })
}

/// The best subset found by random sampling.
#[derive(Clone, Debug)]
pub struct GoldSample {
    /// Family indices of the chosen codes, ascending.
    pub indices: Vec<usize>,
    pub codes: SequenceSet,
    pub isl: i64,
}

/// Per-code and per-pair ISL contributions of a whole family, so that the
/// ISL of any subset is a sum of `O(K^2)` precomputed integers.
struct PairIsl {
    size: usize,
    auto: Vec<i64>,
    // cross[a * size + b] for a < b
    cross: Vec<i64>,
}

impl PairIsl {
    fn new(codes: &SequenceSet) -> Self {
        let (len, size) = (codes.length(), codes.num_codes());
        // Parseval: sum_k (a * b)_k^2 = (1/L) sum_f |A_f|^2 |B_f|^2
        let fft = FftPlanner::<f64>::new().plan_fft_forward(len);
        let power: Vec<Vec<f64>> = codes
            .columns()
            .map(|c| {
                let mut buf: Vec<Complex<f64>> = c.iter().map(|&x| Complex::new(f64::from(x), 0.0)).collect();
                fft.process(&mut buf);
                buf.iter().map(|z| z.norm_sqr()).collect()
            })
            .collect();
        let scale = 1.0 / len as f64;
        let exact = |a: usize, b: usize| -> i64 {
            let s: f64 = power[a].iter().zip(&power[b]).map(|(p, q)| p * q).sum::<f64>() * scale;
            let r = s.round();
            if (s - r).abs() < 1e-3 {
                r as i64
            } else {
                let pair = SequenceSet::from_columns(&[codes.column(a), codes.column(b)]).expect("valid pair");
                CorrelationTable::build_direct(&pair).pair(0, 1).iter().map(|v| v * v).sum()
            }
        };
        let cross: Vec<i64> = (0..size * size)
            .into_par_iter()
            .map(|n| {
                let (a, b) = (n / size, n % size);
                if a < b {
                    exact(a, b)
                } else {
                    0
                }
            })
            .collect();
        let l2 = (len * len) as i64;
        let auto = (0..size).map(|a| exact(a, a) - l2).collect();
        Self { size, auto, cross }
    }

    fn subset_isl(&self, idx: &[usize]) -> i64 {
        let mut total = 0;
        for (n, &a) in idx.iter().enumerate() {
            total += self.auto[a];
            for &b in &idx[n + 1..] {
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                total += self.cross[lo * self.size + hi];
            }
        }
        total
    }
}

/// Samples `num_samples` uniform random `k`-subsets of the family and keeps
/// the one with the smallest ISL (earliest sample wins ties).
pub fn sample_best_gold_subset(family: &GoldFamily, k: usize, num_samples: usize, seed: u64) -> Result<GoldSample> {
    if k == 0 || k > family.len() {
        return Err(usage(format!("subset size {k} must be in 1..={}", family.len())));
    }
    if num_samples == 0 {
        return Err(usage("need at least one sample"));
    }
    let pairs = PairIsl::new(&family.codes);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(i64, Vec<usize>)> = None;
    for _ in 0..num_samples {
        let mut idx = rand::seq::index::sample(&mut rng, family.len(), k).into_vec();
        idx.sort_unstable();
        let isl = pairs.subset_isl(&idx);
        if best.as_ref().is_none_or(|(b, _)| isl < *b) {
            best = Some((isl, idx));
        }
    }
    let (isl, indices) = best.expect("at least one sample");
    let codes = family.subset(&indices)?;
    Ok(GoldSample { indices, codes, isl })
}

/// Recovers the 0/1 form of a chip slice.
pub fn to_bits(chips: &[i8]) -> Vec<u8> {
    chips.iter().map(|&c| chip_to_bit(c)).collect()
}
