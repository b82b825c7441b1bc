//! Stored experiment configuration for `seqopt optimize`.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use seqopt_core::bcd::{BcdConfig, SolverChoice, DEFAULT_EXHAUSTIVE_THRESHOLD};
use seqopt_core::miqp::{BnbConfig, BoundKind, DEFAULT_EXHAUSTIVE_CAP};
use seqopt_core::{Error, Result};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Auto,
    Exhaustive,
    Bnb,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeConfig {
    pub version: u32,
    /// Starting set; a random set of size `L x K` from `init_seed` if absent.
    pub init: Option<PathBuf>,
    #[serde(rename = "L")]
    pub length: Option<usize>,
    #[serde(rename = "K")]
    pub count: Option<usize>,
    pub init_seed: u64,
    #[serde(rename = "N")]
    pub subset_size: usize,
    pub seed: u64,
    pub solver: Solver,
    pub bound: BoundKind,
    pub exhaustive_threshold: usize,
    pub exhaustive_cap: usize,
    pub open_cap: usize,
    pub bnb_time_limit_secs: Option<f64>,
    pub max_iterations: Option<u64>,
    pub time_budget_secs: Option<f64>,
    pub column_stall: Option<u64>,
    pub total_stall: Option<u64>,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        let bnb = BnbConfig::default();
        Self {
            version: CONFIG_VERSION,
            init: None,
            length: None,
            count: None,
            init_seed: 0,
            subset_size: 1,
            seed: 0,
            solver: Solver::Auto,
            bound: bnb.bound,
            exhaustive_threshold: DEFAULT_EXHAUSTIVE_THRESHOLD,
            exhaustive_cap: DEFAULT_EXHAUSTIVE_CAP,
            open_cap: bnb.open_cap,
            bnb_time_limit_secs: None,
            max_iterations: None,
            time_budget_secs: None,
            column_stall: None,
            total_stall: None,
        }
    }
}

fn seconds(name: &str, v: Option<f64>) -> Result<Option<Duration>> {
    v.map(|s| Duration::try_from_secs_f64(s).map_err(|e| Error::Usage(format!("{name}: {e}"))))
        .transpose()
}

impl OptimizeConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Self = toml::from_str(&text).map_err(|e| Error::Parse {
            line: e.span().map_or(0, |s| text[..s.start].lines().count().max(1)),
            msg: format!("{}: {}", path.display(), e.message()),
        })?;
        if cfg.version != CONFIG_VERSION {
            return Err(Error::Usage(format!("unsupported config version {}", cfg.version)));
        }
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string_pretty(self).map_err(|e| Error::Usage(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn bcd(&self) -> Result<BcdConfig> {
        Ok(BcdConfig {
            subset_size: self.subset_size,
            seed: self.seed,
            solver: match self.solver {
                Solver::Auto => SolverChoice::Auto {
                    threshold: self.exhaustive_threshold,
                },
                Solver::Exhaustive => SolverChoice::Exhaustive,
                Solver::Bnb => SolverChoice::Bnb,
            },
            bnb: BnbConfig {
                bound: self.bound,
                open_cap: self.open_cap,
                time_limit: seconds("bnb_time_limit_secs", self.bnb_time_limit_secs)?,
                record_nodes: false,
            },
            exhaustive_cap: self.exhaustive_cap,
            max_iterations: self.max_iterations,
            time_budget: seconds("time_budget_secs", self.time_budget_secs)?,
            column_stall: self.column_stall,
            total_stall: self.total_stall,
        })
    }
}
