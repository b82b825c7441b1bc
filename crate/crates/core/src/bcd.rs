//! Block coordinate descent over sequence sets.
//!
//! Each iteration frees a subset `S` of entries that always contains the
//! sweep position `(i, j)`, solves the restricted problem exactly and keeps
//! the result only if it strictly lowers the ISL. The row `i` advances every
//! iteration; the column `j` advances after `L` consecutive iterations
//! without improvement, and the run stops after `L K` of them. With `N = 1`
//! this is single-entry (BiST) descent and stops at a 1-opt local optimum.
//!
//! For `N > 1` the other `N - 1` entries are drawn uniformly without
//! replacement from column `j` and one other random column `j'`.

use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codegen::{seeded_rng, SeededRng};
use crate::correlation::CorrelationState;
use crate::error::{usage, Error, Result};
use crate::miqp::{
    solve_bnb, solve_exhaustive, BnbConfig, MiqpSubproblem, Solution, SolveStatus, DEFAULT_EXHAUSTIVE_CAP,
};
use crate::sequence::{Coord, IndexSubset, SequenceSet};

/// Subproblem sizes up to this value use exhaustive search by default.
pub const DEFAULT_EXHAUSTIVE_THRESHOLD: usize = 16;

/// How subproblems are solved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum SolverChoice {
    /// Exhaustive search up to `threshold` variables, branch-and-bound above.
    Auto { threshold: usize },
    Exhaustive,
    Bnb,
}

impl Default for SolverChoice {
    fn default() -> Self {
        Self::Auto {
            threshold: DEFAULT_EXHAUSTIVE_THRESHOLD,
        }
    }
}

impl std::str::FromStr for SolverChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Self::default()),
            "exhaustive" => Ok(Self::Exhaustive),
            "bnb" => Ok(Self::Bnb),
            other => Err(usage(format!("unknown solver {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BcdConfig {
    /// Number of free entries per iteration, `N`.
    pub subset_size: usize,
    pub seed: u64,
    pub solver: SolverChoice,
    pub bnb: BnbConfig,
    pub exhaustive_cap: usize,
    pub max_iterations: Option<u64>,
    pub time_budget: Option<Duration>,
    /// Non-improving iterations before moving to the next column; `L` if unset.
    pub column_stall: Option<u64>,
    /// Non-improving iterations before stopping; `L K` if unset.
    pub total_stall: Option<u64>,
}

impl Default for BcdConfig {
    fn default() -> Self {
        Self {
            subset_size: 1,
            seed: 0,
            solver: SolverChoice::default(),
            bnb: BnbConfig::default(),
            exhaustive_cap: DEFAULT_EXHAUSTIVE_CAP,
            max_iterations: None,
            time_budget: None,
            column_stall: None,
            total_stall: None,
        }
    }
}

impl BcdConfig {
    pub fn bist(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn with_subset_size(mut self, n: usize) -> Self {
        self.subset_size = n;
        self
    }

    /// Whether more than the sweep entry is freed each iteration.
    pub fn do_bcd(&self) -> bool {
        self.subset_size > 1
    }

    fn validate(&self, x: &SequenceSet) -> Result<()> {
        if self.subset_size == 0 {
            return Err(usage("subset size must be at least 1"));
        }
        if self.column_stall == Some(0) || self.total_stall == Some(0) {
            return Err(usage("stall limits must be at least 1"));
        }
        let max = if x.num_codes() == 1 { x.length() } else { 2 * x.length() };
        if self.subset_size > max {
            return Err(usage(format!(
                "subset size {} cannot be drawn from two columns of length {}",
                self.subset_size,
                x.length()
            )));
        }
        match self.solver {
            SolverChoice::Exhaustive if self.subset_size > self.exhaustive_cap => Err(usage(format!(
                "subset size {} exceeds the exhaustive cap {}",
                self.subset_size, self.exhaustive_cap
            ))),
            _ => Ok(()),
        }
    }
}

/// Draws the free set: `(i, j)` first, then `N - 1` distinct entries from
/// columns `j` and a random `j' != j` (column `j` alone when `K = 1`).
pub fn select_subset<R: Rng + ?Sized>(
    i: usize,
    j: usize,
    n: usize,
    length: usize,
    count: usize,
    rng: &mut R,
) -> Result<Vec<Coord>> {
    if n == 0 {
        return Err(usage("subset size must be at least 1"));
    }
    if i >= length || j >= count {
        return Err(usage(format!("sweep position ({i},{j}) outside {length}x{count}")));
    }
    let mut out = vec![Coord::new(i, j)];
    if n == 1 {
        return Ok(out);
    }
    let cols: Vec<usize> = if count == 1 {
        vec![j]
    } else {
        let mut other = rng.random_range(0..count - 1);
        if other >= j {
            other += 1;
        }
        vec![j, other]
    };
    let pool = cols.len() * length - 1;
    if n - 1 > pool {
        return Err(usage(format!("cannot draw {n} distinct entries from {} column(s) of length {length}", cols.len())));
    }
    // candidates enumerate rows x cols in order, skipping (i, j)
    let skip = i;
    for idx in sample(rng, pool, n - 1) {
        let flat = if idx >= skip { idx + 1 } else { idx };
        out.push(Coord::new(flat % length, cols[flat / length]));
    }
    Ok(out)
}

/// True iff no single-entry flip strictly lowers the ISL.
pub fn evaluate_local_optimality(x: &SequenceSet) -> bool {
    let st = CorrelationState::new(x.clone());
    (0..x.num_codes()).all(|c| (0..x.length()).all(|r| st.toggle_gain(Coord::new(r, c)) >= 0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    /// `L K` consecutive iterations without improvement.
    Converged,
    MaxIterations,
    /// The wall-clock budget ran out.
    Budget,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Converged => "converged",
            Self::MaxIterations => "max_iterations",
            Self::Budget => "budget",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub t: u64,
    pub subset: Vec<Coord>,
    /// ISL after the iteration.
    pub isl: i64,
    pub nodes: u64,
    pub micros: u64,
    pub timed_out: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunTrace {
    pub initial_isl: i64,
    pub records: Vec<IterationRecord>,
    pub status: RunStatus,
}

impl RunTrace {
    pub fn final_isl(&self) -> i64 {
        self.records.last().map_or(self.initial_isl, |r| r.isl)
    }

    pub fn iterations(&self) -> u64 {
        self.records.len() as u64
    }

    /// True iff the recorded objective never increases.
    pub fn is_monotone(&self) -> bool {
        let mut prev = self.initial_isl;
        self.records.iter().all(|r| {
            let ok = r.isl <= prev;
            prev = r.isl;
            ok
        })
    }
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub sequences: SequenceSet,
    pub trace: RunTrace,
}

/// Runs block coordinate descent from `x0`.
pub fn run(x0: &SequenceSet, config: &BcdConfig) -> Result<RunResult> {
    config.validate(x0)?;
    let (len, count) = (x0.length(), x0.num_codes());
    let column_stall = config.column_stall.unwrap_or(len as u64);
    let total_stall = config.total_stall.unwrap_or((len * count) as u64);
    let mut rng: SeededRng = seeded_rng(config.seed);
    let mut state = CorrelationState::new(x0.clone());
    let initial_isl = state.isl();
    let start = Instant::now();

    let (mut i, mut j) = (0usize, 0usize);
    let (mut since_improved, mut since_column) = (0u64, 0u64);
    let mut records = Vec::new();
    let status = loop {
        if config.max_iterations.is_some_and(|m| records.len() as u64 >= m) {
            break RunStatus::MaxIterations;
        }
        if config.time_budget.is_some_and(|b| start.elapsed() >= b) {
            break RunStatus::Budget;
        }
        let t = records.len() as u64 + 1;
        let coords = select_subset(i, j, config.subset_size, len, count, &mut rng)?;
        let iter_start = Instant::now();
        let before = state.isl();
        let (nodes, timed_out) = step(&mut state, &coords, config)?;
        let after = state.isl();
        if after > before {
            return Err(Error::Solver(format!("iteration {t} increased the ISL from {before} to {after}")));
        }
        records.push(IterationRecord {
            t,
            subset: coords,
            isl: after,
            nodes,
            micros: iter_start.elapsed().as_micros() as u64,
            timed_out,
        });

        if after < before {
            since_improved = 0;
            since_column = 0;
        } else {
            since_improved += 1;
            since_column += 1;
        }
        if since_improved >= total_stall {
            break RunStatus::Converged;
        }
        if since_column >= column_stall {
            j = (j + 1) % count;
            since_column = 0;
        }
        i = (i + 1) % len;
    };
    log::debug!(
        "run finished: {} iterations, ISL {} -> {}, {:?}",
        records.len(),
        initial_isl,
        state.isl(),
        status
    );
    Ok(RunResult {
        sequences: state.into_sequences(),
        trace: RunTrace {
            initial_isl,
            records,
            status,
        },
    })
}

/// Solves a subproblem with the solver selected by `config`.
pub fn solve_subproblem(sub: &MiqpSubproblem<'_>, config: &BcdConfig) -> Result<Solution> {
    let use_exhaustive = match config.solver {
        SolverChoice::Exhaustive => true,
        SolverChoice::Bnb => false,
        SolverChoice::Auto { threshold } => sub.num_vars() <= threshold.min(config.exhaustive_cap),
    };
    if use_exhaustive {
        solve_exhaustive(sub, config.exhaustive_cap)
    } else {
        solve_bnb(sub, &config.bnb)
    }
}

/// Solves one restricted problem and commits it on strict improvement.
fn step(state: &mut CorrelationState, coords: &[Coord], config: &BcdConfig) -> Result<(u64, bool)> {
    let subset = IndexSubset::new(coords.to_vec(), state.sequences())?;
    let sub = MiqpSubproblem::build(state, &subset)?;
    let sol = solve_subproblem(&sub, config)?;
    let flips = sol.flips(&sub);
    let improved = sol.objective < sub.current_objective();
    drop(sub);
    if improved {
        let update = state.isl_delta(&flips)?;
        if update.isl() != sol.objective {
            return Err(Error::Solver(format!(
                "solver reported ISL {} but the committed set has {}",
                sol.objective,
                update.isl()
            )));
        }
        update.commit();
    }
    Ok((sol.nodes, sol.status == SolveStatus::Timeout))
}

/// Runs independent descents from several starting sets in parallel. Each
/// start `n` uses `config` with seed `config.seed + n`.
pub fn multi_start(starts: &[SequenceSet], config: &BcdConfig) -> Result<Vec<RunResult>> {
    starts
        .par_iter()
        .enumerate()
        .map(|(n, x)| {
            let cfg = BcdConfig {
                seed: config.seed.wrapping_add(n as u64),
                ..config.clone()
            };
            run(x, &cfg)
        })
        .collect()
}
