//! Multi-stage experiment: best sampled Gold subset, multi-start BiST, then
//! block coordinate descent stages seeded with the previous stage's outputs.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;

use seqopt_core::bcd::{multi_start, BcdConfig, RunResult};
use seqopt_core::codegen::{generate_gold_family, random_set, sample_best_gold_subset, supported_degrees};
use seqopt_core::{Result, SequenceSet};

use crate::config::{OptimizeConfig, Solver};
use crate::{io_error, to_json, usage, write_trace, Summary};

#[derive(Args, Debug)]
pub struct ReproArgs {
    #[arg(long, default_value_t = 63)]
    l: usize,
    #[arg(long, default_value_t = 4)]
    k: usize,
    /// Number of random starts.
    #[arg(long, default_value_t = 10)]
    starts: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Gold subsets to sample; 0 skips the Gold row.
    #[arg(long, default_value_t = 100_000)]
    gold_samples: usize,
    /// Subset sizes of the block descent stages after BiST.
    #[arg(long, value_delimiter = ',', default_value = "4,20")]
    stages: Vec<usize>,
    #[arg(long, value_enum, default_value = "auto")]
    solver: Solver,
    #[arg(long)]
    max_iterations: Option<u64>,
    /// Wall-clock budget per run in seconds.
    #[arg(long)]
    time_budget: Option<f64>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Serialize)]
struct Row {
    method: String,
    #[serde(rename = "N")]
    subset_size: Option<usize>,
    best_isl: i64,
    median_isl: i64,
    worst_isl: i64,
}

impl Row {
    fn new(method: &str, subset_size: Option<usize>, mut isl: Vec<i64>) -> Self {
        isl.sort_unstable();
        Self {
            method: method.to_string(),
            subset_size,
            best_isl: isl[0],
            median_isl: isl[isl.len() / 2],
            worst_isl: isl[isl.len() - 1],
        }
    }
}

fn gold_degree(l: usize) -> Option<u32> {
    let n = (l + 1).trailing_zeros();
    ((l + 1).is_power_of_two() && supported_degrees().contains(&n)).then_some(n)
}

fn write_stage(dir: &Path, results: &[RunResult], base: &BcdConfig) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (s, r) in results.iter().enumerate() {
        let cfg = BcdConfig {
            seed: base.seed.wrapping_add(s as u64),
            ..base.clone()
        };
        r.sequences.write(dir.join(format!("run{s}.txt")))?;
        write_trace(&dir.join(format!("run{s}.csv")), r)?;
        std::fs::write(dir.join(format!("run{s}.json")), to_json(&Summary::new(r, &cfg))?)?;
    }
    Ok(())
}

pub fn run(a: ReproArgs) -> Result<()> {
    if a.starts == 0 {
        return Err(usage("--starts must be at least 1"));
    }
    std::fs::create_dir_all(&a.out_dir)?;
    let mut rows = Vec::new();

    if a.gold_samples > 0 {
        match gold_degree(a.l) {
            Some(n) => {
                let fam = generate_gold_family(n)?;
                let best = sample_best_gold_subset(&fam, a.k, a.gold_samples, a.seed)?;
                best.codes.write(a.out_dir.join("gold.txt"))?;
                rows.push(Row::new("gold", None, vec![best.isl]));
            }
            None => log::warn!("no Gold family of length {}; skipping", a.l),
        }
    }

    let stage_config = |n: usize, seed: u64| -> Result<BcdConfig> {
        OptimizeConfig {
            subset_size: n,
            seed,
            solver: a.solver,
            max_iterations: a.max_iterations,
            time_budget_secs: a.time_budget,
            ..OptimizeConfig::default()
        }
        .bcd()
    };

    let starts: Vec<SequenceSet> = (0..a.starts)
        .map(|s| random_set(a.l, a.k, a.seed.wrapping_add(s)))
        .collect::<Result<_>>()?;
    let bist_cfg = stage_config(1, a.seed)?;
    let mut current = multi_start(&starts, &bist_cfg)?;
    write_stage(&a.out_dir.join("n1"), &current, &bist_cfg)?;
    rows.push(Row::new("bist", Some(1), current.iter().map(|r| r.trace.final_isl()).collect()));

    for (idx, &n) in a.stages.iter().enumerate() {
        let cfg = stage_config(n, a.seed.wrapping_add(1000 * (idx as u64 + 1)))?;
        let inputs: Vec<SequenceSet> = current.iter().map(|r| r.sequences.clone()).collect();
        current = multi_start(&inputs, &cfg)?;
        write_stage(&a.out_dir.join(format!("n{n}")), &current, &cfg)?;
        rows.push(Row::new("bcd", Some(n), current.iter().map(|r| r.trace.final_isl()).collect()));
    }

    let mut w = csv::Writer::from_path(a.out_dir.join("table1.csv")).map_err(io_error)?;
    for row in &rows {
        w.serialize(row).map_err(io_error)?;
        let n = row.subset_size.map_or_else(|| "-".to_string(), |n| n.to_string());
        println!(
            "{:<6} N={:<3} best {:>8}  median {:>8}  worst {:>8}",
            row.method, n, row.best_isl, row.median_isl, row.worst_isl
        );
    }
    w.flush()?;
    Ok(())
}
