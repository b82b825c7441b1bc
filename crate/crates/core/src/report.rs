//! Evaluation report for a sequence set.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::correlation::CorrelationTable;
use crate::sequence::SequenceSet;

/// Largest-magnitude sidelobe of one pair of codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairPeak {
    pub i: usize,
    pub j: usize,
    /// Smallest shift attaining the peak.
    pub k: usize,
    pub value: i64,
    /// Sum of squared sidelobes of the pair.
    pub isl: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    #[serde(rename = "L")]
    pub length: usize,
    #[serde(rename = "K")]
    pub count: usize,
    pub isl: i64,
    pub psl: i64,
    /// Number of sidelobes taking each correlation value.
    pub histogram: BTreeMap<i64, u64>,
    pub pairs: Vec<PairPeak>,
}

impl Report {
    pub fn new(x: &SequenceSet) -> Self {
        Self::from_table(&CorrelationTable::build(x))
    }

    pub fn from_table(table: &CorrelationTable) -> Self {
        let mut histogram = BTreeMap::new();
        for v in table.sidelobes() {
            *histogram.entry(v).or_insert(0) += 1;
        }
        let pairs = table
            .pairs()
            .filter_map(|(i, j, v)| {
                let start = usize::from(i == j);
                let (k, value) = v
                    .iter()
                    .enumerate()
                    .skip(start)
                    .fold(None::<(usize, i64)>, |best, (k, &x)| match best {
                        Some((_, b)) if b.abs() >= x.abs() => best,
                        _ => Some((k, x)),
                    })?;
                let isl = v[start..].iter().map(|x| x * x).sum();
                Some(PairPeak { i, j, k, value, isl })
            })
            .collect();
        Self {
            length: table.length(),
            count: table.num_codes(),
            isl: table.isl(),
            psl: table.psl(),
            histogram,
            pairs,
        }
    }
}
