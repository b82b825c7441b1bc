//! Periodic correlations, the ISL and PSL objectives, and incremental
//! re-evaluation under chip flips.
//!
//! All values are exact integers. The cross-correlation of columns `i` and
//! `j` at shift `k` is `sum_m X[m,i] * X[(m+k) mod L, j]`.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{usage, Result};
use crate::sequence::{Coord, Flip, SequenceSet};

/// Sequence length from which [`CorrelationTable::build`] prefers the FFT path.
pub const FFT_THRESHOLD: usize = 128;

/// Direct evaluation of `(X_i * X_j)_k` for any pair of columns.
pub fn cross_correlation(x: &SequenceSet, i: usize, j: usize, k: usize) -> Result<i64> {
    let (len, count) = (x.length(), x.num_codes());
    if i >= count || j >= count {
        return Err(usage(format!("column index out of range for K={count}")));
    }
    if k >= len {
        return Err(usage(format!("shift {k} out of range for L={len}")));
    }
    Ok(correlate_direct(x.column(i), x.column(j), k))
}

fn correlate_direct(a: &[i8], b: &[i8], k: usize) -> i64 {
    let len = a.len();
    let (head, tail) = b.split_at(k);
    // b shifted left by k is tail ++ head
    let first: i64 = a[..len - k].iter().zip(tail).map(|(&p, &q)| i64::from(p * q)).sum();
    let second: i64 = a[len - k..].iter().zip(head).map(|(&p, &q)| i64::from(p * q)).sum();
    first + second
}

/// Index of the unordered pair `i <= j` in upper-triangular row-major order.
#[inline]
pub(crate) fn pair_index(count: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < count);
    i * count - i * (i + 1) / 2 + j
}

/// All periodic correlation values `(X_i * X_j)_k` for `i <= j`.
///
/// `(X_j * X_i)_k` is recovered as `(X_i * X_j)_{(L-k) mod L}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorrelationTable {
    length: usize,
    count: usize,
    values: Vec<i64>,
}

impl CorrelationTable {
    /// Builds the table, using the FFT path for long sequences.
    pub fn build(x: &SequenceSet) -> Self {
        if x.length() >= FFT_THRESHOLD {
            Self::build_fft(x)
        } else {
            Self::build_direct(x)
        }
    }

    /// `O(K^2 L^2)` direct evaluation.
    pub fn build_direct(x: &SequenceSet) -> Self {
        let (len, count) = (x.length(), x.num_codes());
        let mut values = Vec::with_capacity(count * (count + 1) / 2 * len);
        for i in 0..count {
            for j in i..count {
                let (a, b) = (x.column(i), x.column(j));
                values.extend((0..len).map(|k| correlate_direct(a, b, k)));
            }
        }
        let table = Self { length: len, count, values };
        table.debug_check();
        table
    }

    /// `O(K^2 L log L)` evaluation through the DFT. Results are rounded to
    /// integers and validated (magnitude and parity); if validation fails the
    /// direct path is used instead.
    pub fn build_fft(x: &SequenceSet) -> Self {
        let (len, count) = (x.length(), x.num_codes());
        let mut planner = FftPlanner::<f64>::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let spectra: Vec<Vec<Complex<f64>>> = x
            .columns()
            .map(|col| {
                let mut buf: Vec<Complex<f64>> = col.iter().map(|&c| Complex::new(f64::from(c), 0.0)).collect();
                forward.process(&mut buf);
                buf
            })
            .collect();

        let mut values = Vec::with_capacity(count * (count + 1) / 2 * len);
        let mut buf = vec![Complex::new(0.0, 0.0); len];
        let scale = 1.0 / len as f64;
        let parity = (len % 2) as i64;
        for i in 0..count {
            for j in i..count {
                for ((out, a), b) in buf.iter_mut().zip(&spectra[i]).zip(&spectra[j]) {
                    *out = a.conj() * b;
                }
                inverse.process(&mut buf);
                for c in &buf {
                    let v = (c.re * scale).round() as i64;
                    if v.abs() > len as i64 || v.rem_euclid(2) != parity {
                        log::warn!("FFT correlation failed validation; falling back to direct evaluation");
                        return Self::build_direct(x);
                    }
                    values.push(v);
                }
            }
        }
        let table = Self { length: len, count, values };
        table.debug_check();
        table
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn num_codes(&self) -> usize {
        self.count
    }

    /// Correlation values of the pair `i <= j` for every shift.
    #[inline]
    pub fn pair(&self, i: usize, j: usize) -> &[i64] {
        let p = pair_index(self.count, i, j);
        &self.values[p * self.length..(p + 1) * self.length]
    }

    #[inline]
    fn pair_mut(&mut self, i: usize, j: usize) -> &mut [i64] {
        let p = pair_index(self.count, i, j);
        &mut self.values[p * self.length..(p + 1) * self.length]
    }

    /// `(X_i * X_j)_k` for any ordering of `i` and `j`.
    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> i64 {
        if i <= j {
            self.pair(i, j)[k]
        } else {
            self.pair(j, i)[(self.length - k) % self.length]
        }
    }

    /// Iterates over `(i, j, values)` for every stored pair.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, &[i64])> {
        let count = self.count;
        (0..count)
            .flat_map(move |i| (i..count).map(move |j| (i, j)))
            .zip(self.values.chunks_exact(self.length))
            .map(|((i, j), v)| (i, j, v))
    }

    /// Integrated sidelobe level: sum of squared correlations over all pairs
    /// `i <= j` and shifts, excluding the zero-shift autocorrelations.
    pub fn isl(&self) -> i64 {
        self.sidelobes().map(|v| v * v).sum()
    }

    /// Peak sidelobe level over the same index set as [`isl`](Self::isl).
    pub fn psl(&self) -> i64 {
        self.sidelobes().map(i64::abs).max().unwrap_or(0)
    }

    pub fn objective(&self) -> ObjectiveValue {
        ObjectiveValue {
            isl: self.isl(),
            psl: Some(self.psl()),
        }
    }

    /// Every correlation value counted by the objectives.
    pub fn sidelobes(&self) -> impl Iterator<Item = i64> + '_ {
        self.pairs()
            .flat_map(|(i, j, v)| v.iter().skip(usize::from(i == j)).copied())
    }

    /// Checks the structural invariants: zero-shift autocorrelation equals
    /// `L`, every value is bounded by `L` and has the parity of `L`.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let len = self.length as i64;
        for (i, j, v) in self.pairs() {
            if i == j && v[0] != len {
                return Err(format!("autocorrelation of column {i} at shift 0 is {}", v[0]));
            }
            if let Some((k, val)) = v.iter().enumerate().find(|(_, &x)| x.abs() > len || (x - len).rem_euclid(2) != 0) {
                return Err(format!("value {val} at ({i},{j},{k}) violates bound or parity"));
            }
        }
        Ok(())
    }

    fn debug_check(&self) {
        debug_assert_eq!(self.check_invariants(), Ok(()));
    }
}

/// Objective values of a sequence set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ObjectiveValue {
    pub isl: i64,
    pub psl: Option<i64>,
}

/// A sequence set together with its correlation table and ISL, kept in sync
/// under chip flips at `O(K L)` cost per flip.
#[derive(Clone, Debug)]
pub struct CorrelationState {
    seqs: SequenceSet,
    table: CorrelationTable,
    isl: i64,
}

impl CorrelationState {
    pub fn new(seqs: SequenceSet) -> Self {
        let table = CorrelationTable::build(&seqs);
        let isl = table.isl();
        Self { seqs, table, isl }
    }

    pub fn sequences(&self) -> &SequenceSet {
        &self.seqs
    }

    pub fn table(&self) -> &CorrelationTable {
        &self.table
    }

    pub fn isl(&self) -> i64 {
        self.isl
    }

    pub fn into_sequences(self) -> SequenceSet {
        self.seqs
    }

    /// Negates the chip at `at`, updating the table and ISL.
    pub fn toggle(&mut self, at: Coord) {
        let Coord { row: m, col: c } = at;
        let (len, count) = (self.seqs.length(), self.seqs.num_codes());
        let new = -self.seqs.get(m, c);
        let d = 2 * i64::from(new);
        let mut isl = self.isl;

        for i in 0..c {
            let other = self.seqs.column(i);
            let vals = self.table.pair_mut(i, c);
            // (X_i * X_c)_k picks up X[m-k, i] * X[m, c]
            let mut r = m;
            for v in vals.iter_mut() {
                let old = *v;
                *v += d * i64::from(other[r]);
                isl += *v * *v - old * old;
                r = if r == 0 { len - 1 } else { r - 1 };
            }
        }
        {
            let own = self.seqs.column(c);
            let vals = self.table.pair_mut(c, c);
            let (mut up, mut down) = (m, m);
            for v in vals.iter_mut().skip(1) {
                up = if up + 1 == len { 0 } else { up + 1 };
                down = if down == 0 { len - 1 } else { down - 1 };
                let old = *v;
                *v += d * i64::from(own[up] + own[down]);
                isl += *v * *v - old * old;
            }
        }
        for j in c + 1..count {
            let other = self.seqs.column(j);
            let vals = self.table.pair_mut(c, j);
            let mut r = m;
            for v in vals.iter_mut() {
                let old = *v;
                *v += d * i64::from(other[r]);
                isl += *v * *v - old * old;
                r = if r + 1 == len { 0 } else { r + 1 };
            }
        }
        self.isl = isl;
        self.seqs.set(m, c, new);
    }

    /// Change in ISL if the chip at `at` were negated; does not mutate.
    pub fn toggle_gain(&self, at: Coord) -> i64 {
        let Coord { row: m, col: c } = at;
        let (len, count) = (self.seqs.length(), self.seqs.num_codes());
        let d = -2 * i64::from(self.seqs.get(m, c));
        let mut delta = 0;
        let mut change = |old: i64, step: i64| {
            let new = old + step;
            delta += new * new - old * old;
        };
        for i in 0..c {
            let other = self.seqs.column(i);
            let mut r = m;
            for &v in self.table.pair(i, c) {
                change(v, d * i64::from(other[r]));
                r = if r == 0 { len - 1 } else { r - 1 };
            }
        }
        let own = self.seqs.column(c);
        let (mut up, mut down) = (m, m);
        for &v in &self.table.pair(c, c)[1..] {
            up = if up + 1 == len { 0 } else { up + 1 };
            down = if down == 0 { len - 1 } else { down - 1 };
            change(v, d * i64::from(own[up] + own[down]));
        }
        for j in c + 1..count {
            let other = self.seqs.column(j);
            let mut r = m;
            for &v in self.table.pair(c, j) {
                change(v, d * i64::from(other[r]));
                r = if r + 1 == len { 0 } else { r + 1 };
            }
        }
        delta
    }

    /// Applies a set of proposed chip values and returns a pending update.
    ///
    /// The update is reverted when dropped unless [`PendingUpdate::commit`]
    /// is called. Cost is `O(|flips| K L)`.
    pub fn isl_delta(&mut self, flips: &[Flip]) -> Result<PendingUpdate<'_>> {
        for (n, f) in flips.iter().enumerate() {
            if !self.seqs.contains(f.at) {
                return Err(usage(format!("flip index {} out of range", f.at)));
            }
            if f.value != 1 && f.value != -1 {
                return Err(usage(format!("proposed value {} is not +1 or -1", f.value)));
            }
            if flips[..n].iter().any(|g| g.at == f.at) {
                return Err(usage(format!("duplicate flip index {}", f.at)));
            }
        }
        let mut toggled = Vec::with_capacity(flips.len());
        for f in flips {
            if self.seqs.at(f.at) != f.value {
                self.toggle(f.at);
                toggled.push(f.at);
            }
        }
        Ok(PendingUpdate {
            state: self,
            toggled,
            committed: false,
        })
    }
}

/// Flips applied to a [`CorrelationState`] that have not been committed yet.
#[derive(Debug)]
pub struct PendingUpdate<'a> {
    state: &'a mut CorrelationState,
    toggled: Vec<Coord>,
    committed: bool,
}

impl PendingUpdate<'_> {
    /// ISL of the updated set.
    pub fn isl(&self) -> i64 {
        self.state.isl
    }

    pub fn table(&self) -> &CorrelationTable {
        &self.state.table
    }

    pub fn sequences(&self) -> &SequenceSet {
        &self.state.seqs
    }

    pub fn commit(mut self) {
        self.committed = true;
    }

    /// Reverts the flips (same as dropping).
    pub fn discard(self) {}
}

impl Drop for PendingUpdate<'_> {
    fn drop(&mut self) {
        if !self.committed {
            for &at in self.toggled.iter().rev() {
                self.state.toggle(at);
            }
        }
    }
}
