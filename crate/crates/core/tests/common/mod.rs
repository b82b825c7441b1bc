//! Reference implementations used as test oracles. Everything here works on
//! plain `Vec<Vec<i8>>` columns and recomputes from scratch.

#![allow(dead_code)]

use seqopt_core::{Coord, SequenceSet};

pub fn columns(x: &SequenceSet) -> Vec<Vec<i8>> {
    x.columns().map(<[i8]>::to_vec).collect()
}

pub fn corr(x: &[Vec<i8>], i: usize, j: usize, k: usize) -> i64 {
    let l = x[i].len();
    (0..l).map(|m| i64::from(x[i][m]) * i64::from(x[j][(m + k) % l])).sum()
}

/// Every sidelobe `(i, j, k)` with `i <= j`, excluding zero-shift autocorrelations.
pub fn sidelobes(x: &[Vec<i8>]) -> Vec<i64> {
    let (l, kk) = (x[0].len(), x.len());
    let mut out = Vec::new();
    for i in 0..kk {
        for j in i..kk {
            for k in usize::from(i == j)..l {
                out.push(corr(x, i, j, k));
            }
        }
    }
    out
}

pub fn isl(x: &[Vec<i8>]) -> i64 {
    sidelobes(x).iter().map(|v| v * v).sum()
}

pub fn psl(x: &[Vec<i8>]) -> i64 {
    sidelobes(x).iter().map(|v| v.abs()).max().unwrap_or(0)
}

/// ISL of every completion of the free entries; bit `v` of the index set
/// means entry `v` is `+1`.
pub fn completion_table(x: &SequenceSet, vars: &[Coord]) -> Vec<i64> {
    let mut cols = columns(x);
    (0u64..1 << vars.len())
        .map(|bits| {
            for (v, c) in vars.iter().enumerate() {
                cols[c.col][c.row] = if bits >> v & 1 == 1 { 1 } else { -1 };
            }
            isl(&cols)
        })
        .collect()
}

/// Minimum of `table` over completions consistent with a partial assignment.
pub fn completion_min(table: &[i64], values: &[Option<i8>]) -> i64 {
    let (mut fixed_mask, mut fixed_bits) = (0usize, 0usize);
    for (v, val) in values.iter().enumerate() {
        if let Some(x) = val {
            fixed_mask |= 1 << v;
            if *x > 0 {
                fixed_bits |= 1 << v;
            }
        }
    }
    table
        .iter()
        .enumerate()
        .filter(|(b, _)| b & fixed_mask == fixed_bits)
        .map(|(_, &f)| f)
        .min()
        .expect("nonempty")
}

/// Assignment in `S` order for a completion-table index.
pub fn assignment(bits: usize, n: usize) -> Vec<i8> {
    (0..n).map(|v| if bits >> v & 1 == 1 { 1 } else { -1 }).collect()
}

/// Reference single-entry descent: sweeps `(i, j)` with the same schedule as
/// the descent loop, testing each flip by a full recomputation.
pub fn reference_bist(x0: &SequenceSet) -> (SequenceSet, Vec<i64>) {
    let mut x = columns(x0);
    let (l, kk) = (x[0].len(), x.len());
    let mut f = isl(&x);
    let mut trace = Vec::new();
    let (mut i, mut j, mut stall, mut col_stall) = (0, 0, 0, 0);
    loop {
        x[j][i] = -x[j][i];
        let g = isl(&x);
        if g < f {
            f = g;
            stall = 0;
            col_stall = 0;
        } else {
            x[j][i] = -x[j][i];
            stall += 1;
            col_stall += 1;
        }
        trace.push(f);
        if stall >= l * kk {
            break;
        }
        if col_stall >= l {
            j = (j + 1) % kk;
            col_stall = 0;
        }
        i = (i + 1) % l;
    }
    (SequenceSet::from_columns(&x).unwrap(), trace)
}
