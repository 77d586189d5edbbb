use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{Arithmetic, Guards};
use crate::pattern::{remove_isolated_vertices, Pattern};
use crate::prob::ScheduleSpec;

/// Quantity groups a sweep can produce.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Output {
    Moments,
    Bounds,
    Conditions,
    Distances,
    HoeffdingVerify,
    Kurtosis,
}

fn default_delta() -> f64 {
    0.01
}

fn default_arithmetic() -> Arithmetic {
    Arithmetic::Float
}

fn default_hoeffding_reps() -> usize {
    200
}

/// One experiment: a pattern, a schedule per edge size and a grid of `n`.
///
/// Schedules use the assignment grammar of the CLI, e.g. `p2=0.5`,
/// `q1=n^-3` or `p3=2*n^-1.5`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Pattern file, relative paths resolved against the config file.
    pub pattern: PathBuf,
    pub schedule: Vec<String>,
    pub n_grid: Vec<u64>,
    /// Monte Carlo replications per grid point.
    pub reps: usize,
    pub seed: u64,
    pub outputs: Vec<Output>,
    pub output_dir: PathBuf,
    /// DKW confidence parameter for empirical distances.
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_arithmetic")]
    pub arithmetic: Arithmetic,
    /// Realisations per grid point for the Hoeffding check.
    #[serde(default = "default_hoeffding_reps")]
    pub hoeffding_reps: usize,
    #[serde(default)]
    pub guards: Guards,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Reads and validates a config file, resolving the pattern path.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::from_json(&std::fs::read_to_string(path)?)?;
        if cfg.pattern.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.pattern = dir.join(&cfg.pattern);
            }
        }
        Ok(cfg)
    }

    pub fn schedule_spec(&self) -> Result<ScheduleSpec> {
        ScheduleSpec::parse_assignments(&self.schedule)
    }

    pub fn read_pattern(&self) -> Result<Pattern> {
        Pattern::parse(&std::fs::read_to_string(&self.pattern)?)
    }

    /// Checks the grid and that every edge size of `pattern` is scheduled.
    pub fn validate(&self, pattern: &Pattern) -> Result<ScheduleSpec> {
        if self.n_grid.is_empty() {
            return Err(Error::Config("n_grid is empty".into()));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("n_grid must be strictly increasing".into()));
        }
        if self.n_grid[0] == 0 {
            return Err(Error::Config("n_grid values must be positive".into()));
        }
        if self.outputs.contains(&Output::Distances) && self.reps < 2 {
            return Err(Error::Config("distances need at least 2 replications".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        let schedule = self.schedule_spec()?;
        let (core, _) = remove_isolated_vertices(pattern)?;
        schedule
            .require(&core.distinct_sizes())
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(schedule)
    }
}
