use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde::Serialize;

use seqopt_core::bcd::{self, BcdConfig, RunResult};
use seqopt_core::codegen::{
    default_taps, generate_gold_family, generate_mseq, random_set, sample_best_gold_subset, seeded_rng, LfsrSpec,
};
use seqopt_core::miqp::{BoundKind, MiqpSubproblem};
use seqopt_core::report::Report;
use seqopt_core::{CorrelationState, CorrelationTable, Error, IndexSubset, Result, SequenceSet};

mod config;
mod repro;

use config::{OptimizeConfig, Solver};

#[derive(Parser, Debug)]
#[command(name = "seqopt", version, about = "Binary sequence set design by ISL minimization")]
struct Cli {
    /// Increase log verbosity (repeatable).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a Gold, m-sequence or random sequence set.
    Generate(GenerateArgs),
    /// Run BiST or block coordinate descent on a sequence set.
    Optimize(OptimizeArgs),
    /// Report ISL, PSL and correlation statistics of a sequence set.
    Evaluate(EvaluateArgs),
    /// Median subproblem solve time and node count per length and subset size.
    Benchmark(BenchmarkArgs),
    /// Gold sampling, multi-start BiST and block descent stages in one run.
    #[command(name = "repro-table1")]
    ReproTable1(repro::ReproArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Family {
    Gold,
    Mseq,
    Random,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    family: Family,
    /// LFSR degree (gold, mseq).
    #[arg(long)]
    n: Option<u32>,
    /// Number of codes (gold subset size, random).
    #[arg(long)]
    k: Option<usize>,
    /// Sequence length (random).
    #[arg(long)]
    l: Option<usize>,
    /// Random Gold subsets to sample when --k is given.
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Feedback taps for mseq, e.g. 5,3.
    #[arg(long, value_delimiter = ',')]
    taps: Option<Vec<u32>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OptimizeArgs {
    /// TOML experiment config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Starting set file; a random set is used if absent.
    #[arg(long)]
    init: Option<PathBuf>,
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    init_seed: Option<u64>,
    /// Subset size; 1 runs BiST.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    solver: Option<Solver>,
    #[arg(long)]
    bound: Option<BoundKind>,
    #[arg(long)]
    exhaustive_threshold: Option<usize>,
    #[arg(long)]
    exhaustive_cap: Option<usize>,
    /// Per-subproblem branch-and-bound limit in seconds.
    #[arg(long)]
    bnb_time_limit: Option<f64>,
    #[arg(long)]
    max_iterations: Option<u64>,
    /// Wall-clock budget for the whole run in seconds.
    #[arg(long)]
    time_budget: Option<f64>,
    /// Optimized set; written to stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-iteration CSV trace.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Summary JSON; written to stderr if absent.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Write the resolved config as TOML.
    #[arg(long)]
    save_config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchmarkArgs {
    #[arg(long, value_delimiter = ',', default_value = "63,127")]
    l: Vec<usize>,
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,12,16,20")]
    n: Vec<usize>,
    #[arg(long, default_value_t = 11)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "bnb")]
    solver: Solver,
    #[arg(long, default_value = "polynomial")]
    bound: BoundKind,
    /// Sample subproblems at the random start instead of a BiST fixed point.
    #[arg(long)]
    cold: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();

    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Optimize(a) => optimize(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Benchmark(a) => benchmark(a),
        Command::ReproTable1(a) => repro::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("seqopt: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Usage(_) | Error::Generation(_) => 2,
        Error::Parse { .. } | Error::Io(_) => 3,
        Error::Solver(_) => 4,
    }
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

fn io_error(e: impl std::error::Error + Send + Sync + 'static) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(io_error)?;
    s.push('\n');
    Ok(s)
}

fn generate(a: GenerateArgs) -> Result<()> {
    let need_n = || a.n.ok_or_else(|| usage("--n is required for this family"));
    let set = match a.family {
        Family::Gold => {
            let fam = generate_gold_family(need_n()?)?;
            match a.k {
                Some(k) => {
                    let best = sample_best_gold_subset(&fam, k, a.samples, a.seed)?;
                    log::info!("best of {} Gold subsets: codes {:?}, ISL {}", a.samples, best.indices, best.isl);
                    best.codes
                }
                None => fam.codes,
            }
        }
        Family::Mseq => {
            let n = need_n()?;
            let taps = match a.taps.clone() {
                Some(t) => t,
                None => default_taps(n).ok_or_else(|| usage(format!("no default taps for degree {n}; pass --taps")))?,
            };
            SequenceSet::from_columns(&[generate_mseq(&LfsrSpec::new(n, taps))?])?
        }
        Family::Random => {
            let l = a.l.ok_or_else(|| usage("--l is required for random sets"))?;
            let k = a.k.ok_or_else(|| usage("--k is required for random sets"))?;
            random_set(l, k, a.seed)?
        }
    };
    write_text(a.out.as_deref(), &set.to_text())
}

impl OptimizeArgs {
    fn resolve(&self) -> Result<OptimizeConfig> {
        let mut cfg = match &self.config {
            Some(p) => OptimizeConfig::load(p)?,
            None => OptimizeConfig::default(),
        };
        macro_rules! set {
            ($($field:ident = $value:expr),* $(,)?) => {
                $(if let Some(v) = $value { cfg.$field = v; })*
            };
        }
        set!(
            subset_size = self.n,
            seed = self.seed,
            init_seed = self.init_seed,
            solver = self.solver,
            bound = self.bound,
            exhaustive_threshold = self.exhaustive_threshold,
            exhaustive_cap = self.exhaustive_cap,
        );
        if self.init.is_some() {
            cfg.init = self.init.clone();
        }
        cfg.length = self.l.or(cfg.length);
        cfg.count = self.k.or(cfg.count);
        cfg.bnb_time_limit_secs = self.bnb_time_limit.or(cfg.bnb_time_limit_secs);
        cfg.max_iterations = self.max_iterations.or(cfg.max_iterations);
        cfg.time_budget_secs = self.time_budget.or(cfg.time_budget_secs);
        Ok(cfg)
    }
}

/// Summary of one optimization run.
#[derive(Serialize)]
pub(crate) struct Summary {
    #[serde(rename = "L")]
    length: usize,
    #[serde(rename = "K")]
    count: usize,
    #[serde(rename = "N")]
    subset_size: usize,
    seed: u64,
    isl_initial: i64,
    isl_final: i64,
    psl_final: i64,
    iterations: u64,
    status: &'static str,
}

impl Summary {
    pub(crate) fn new(r: &RunResult, config: &BcdConfig) -> Self {
        let table = CorrelationTable::build(&r.sequences);
        Self {
            length: r.sequences.length(),
            count: r.sequences.num_codes(),
            subset_size: config.subset_size,
            seed: config.seed,
            isl_initial: r.trace.initial_isl,
            isl_final: table.isl(),
            psl_final: table.psl(),
            iterations: r.trace.iterations(),
            status: r.trace.status.as_str(),
        }
    }
}

pub(crate) fn write_trace(path: &Path, r: &RunResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(io_error)?;
    w.write_record(["t", "isl", "subset_size", "nodes", "micros"]).map_err(io_error)?;
    for rec in &r.trace.records {
        w.serialize((rec.t, rec.isl, rec.subset.len(), rec.nodes, rec.micros)).map_err(io_error)?;
    }
    w.flush()?;
    Ok(())
}

fn optimize(a: OptimizeArgs) -> Result<()> {
    let cfg = a.resolve()?;
    if let Some(p) = &a.save_config {
        cfg.save(p)?;
    }
    let x0 = match &cfg.init {
        Some(p) => SequenceSet::read(p)?,
        None => {
            let l = cfg.length.ok_or_else(|| usage("give --init or both --l and --k"))?;
            let k = cfg.count.ok_or_else(|| usage("give --init or both --l and --k"))?;
            random_set(l, k, cfg.init_seed)?
        }
    };
    let bcd_cfg = cfg.bcd()?;
    let r = bcd::run(&x0, &bcd_cfg)?;
    let summary = to_json(&Summary::new(&r, &bcd_cfg))?;
    write_text(a.out.as_deref(), &r.sequences.to_text())?;
    if let Some(p) = &a.trace {
        write_trace(p, &r)?;
    }
    match &a.summary {
        Some(p) => std::fs::write(p, summary)?,
        None => eprint!("{summary}"),
    }
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let set = SequenceSet::read(&a.input)?;
    write_text(a.out.as_deref(), &to_json(&Report::new(&set))?)
}

#[derive(Serialize)]
struct BenchRow {
    #[serde(rename = "L")]
    length: usize,
    #[serde(rename = "K")]
    count: usize,
    #[serde(rename = "N")]
    subset_size: usize,
    trials: usize,
    solver: &'static str,
    median_micros: u64,
    median_nodes: u64,
    max_nodes: u64,
}

fn median(mut v: Vec<u64>) -> u64 {
    v.sort_unstable();
    v[v.len() / 2]
}

fn benchmark(a: BenchmarkArgs) -> Result<()> {
    if a.trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for &l in &a.l {
        let mut x = random_set(l, a.k, a.seed)?;
        if !a.cold {
            x = bcd::run(&x, &BcdConfig::bist(a.seed))?.sequences;
        }
        let state = CorrelationState::new(x);
        for &n in &a.n {
            let cfg = OptimizeConfig {
                subset_size: n,
                solver: a.solver,
                bound: a.bound,
                ..OptimizeConfig::default()
            }
            .bcd()?;
            let mut rng = seeded_rng(a.seed ^ (l as u64) << 32 ^ n as u64);
            let (mut micros, mut nodes) = (Vec::new(), Vec::new());
            for _ in 0..a.trials {
                let (i, j) = (rng.random_range(0..l), rng.random_range(0..a.k));
                let coords = bcd::select_subset(i, j, n, l, a.k, &mut rng)?;
                let sub = MiqpSubproblem::build(&state, &IndexSubset::new(coords, state.sequences())?)?;
                let start = Instant::now();
                let sol = bcd::solve_subproblem(&sub, &cfg)?;
                micros.push(start.elapsed().as_micros() as u64);
                nodes.push(sol.nodes);
            }
            let row = BenchRow {
                length: l,
                count: a.k,
                subset_size: n,
                trials: a.trials,
                solver: match cfg.solver {
                    bcd::SolverChoice::Exhaustive => "exhaustive",
                    bcd::SolverChoice::Bnb => "bnb",
                    bcd::SolverChoice::Auto { threshold } if n <= threshold.min(cfg.exhaustive_cap) => "exhaustive",
                    bcd::SolverChoice::Auto { .. } => "bnb",
                },
                max_nodes: *nodes.iter().max().expect("trials > 0"),
                median_micros: median(micros),
                median_nodes: median(nodes),
            };
            log::info!("L={l} N={n}: median {} us, {} nodes", row.median_micros, row.median_nodes);
            w.serialize(row).map_err(io_error)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| io_error(e.into_error()))?;
    write_text(a.out.as_deref(), &String::from_utf8_lossy(&bytes))
}
