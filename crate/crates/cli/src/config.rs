//! Run configuration: built-in defaults, overridden by a `key=value` config
//! file, overridden by command-line flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use qnnae_core::dataio::SplitSpec;
use qnnae_core::mlp::{Activation, TrainConfig};
use qnnae_core::qnnae::{DEFAULT_GRID_BUDGET, DEFAULT_HIDDEN_RANGE};

use crate::CliError;

/// Seed used when none is given anywhere.
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_SAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub activation: Activation,
    pub samples: usize,
    pub seed: u64,
    pub train_fraction: f64,
    pub stratified: bool,
    pub hidden_range: (usize, usize),
    pub threads: usize,
    pub levels: Vec<f64>,
    pub budget: u64,
    pub train_grid: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let split = SplitSpec::default();
        Self {
            train: TrainConfig::default(),
            activation: Activation::default(),
            samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
            train_fraction: split.train_fraction,
            stratified: split.stratified,
            hidden_range: DEFAULT_HIDDEN_RANGE,
            threads: 0,
            levels: vec![-1.0, 0.0, 1.0],
            budget: DEFAULT_GRID_BUDGET,
            train_grid: false,
        }
    }
}

impl RunConfig {
    pub fn split(&self) -> SplitSpec {
        SplitSpec {
            train_fraction: self.train_fraction,
            seed: self.seed,
            stratified: self.stratified,
        }
    }

    /// Applies every `key=value` pair. Unknown keys are errors.
    pub fn apply(&mut self, settings: &BTreeMap<String, String>) -> Result<(), CliError> {
        for (key, value) in settings {
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let bad = || CliError::Input(format!("invalid value {value:?} for {key}"));
        match key {
            "alpha" => self.train.l2_alpha = value.parse().map_err(|_| bad())?,
            "max_iter" => self.train.max_iter = value.parse().map_err(|_| bad())?,
            "learning_rate" => self.train.learning_rate = value.parse().map_err(|_| bad())?,
            "tolerance" => self.train.tolerance = value.parse().map_err(|_| bad())?,
            "activation" => self.activation = value.parse().map_err(|_| bad())?,
            "samples" => self.samples = value.parse().map_err(|_| bad())?,
            "seed" => self.seed = value.parse().map_err(|_| bad())?,
            "train_fraction" => self.train_fraction = value.parse().map_err(|_| bad())?,
            "stratified" => self.stratified = value.parse().map_err(|_| bad())?,
            "hidden_lo" => self.hidden_range.0 = value.parse().map_err(|_| bad())?,
            "hidden_hi" => self.hidden_range.1 = value.parse().map_err(|_| bad())?,
            "threads" => self.threads = value.parse().map_err(|_| bad())?,
            "levels" => self.levels = parse_levels(value)?,
            "budget" => self.budget = value.parse().map_err(|_| bad())?,
            "train_grid" => self.train_grid = value.parse().map_err(|_| bad())?,
            other => return Err(CliError::Input(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "alpha={:e}", self.train.l2_alpha)?;
        writeln!(f, "max_iter={}", self.train.max_iter)?;
        writeln!(f, "learning_rate={}", self.train.learning_rate)?;
        writeln!(f, "tolerance={:e}", self.train.tolerance)?;
        writeln!(f, "activation={}", self.activation)?;
        writeln!(f, "samples={}", self.samples)?;
        writeln!(f, "seed={}", self.seed)?;
        writeln!(f, "train_fraction={}", self.train_fraction)?;
        writeln!(f, "stratified={}", self.stratified)?;
        writeln!(f, "hidden_range=[{},{})", self.hidden_range.0, self.hidden_range.1)?;
        writeln!(f, "threads={}", self.threads)?;
        let levels: Vec<String> = self.levels.iter().map(|l| l.to_string()).collect();
        writeln!(f, "levels={}", levels.join(","))?;
        writeln!(f, "budget={}", self.budget)?;
        writeln!(f, "train_grid={}", self.train_grid)
    }
}

pub fn parse_levels(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Input(format!("invalid weight level {s:?}")))
        })
        .collect()
}

/// Parses a flat `key = value` file. `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Input(format!("config line {}: expected key=value", i + 1))
        })?;
        out.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(out)
}

pub fn load_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    parse_config_text(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_reference_protocol() {
        let c = RunConfig::default();
        assert_eq!(c.train.l2_alpha, 1e-5);
        assert_eq!(c.train.max_iter, 400);
        assert_eq!(c.samples, 1000);
        assert_eq!(c.hidden_range, (1, 20));
        assert_eq!(c.train_fraction, 0.1);
        let text = c.to_string();
        assert!(text.contains("alpha=1e-5\n"));
        assert!(text.contains("hidden_range=[1,20)\n"));
    }

    #[test]
    fn config_file_overrides() {
        let map = parse_config_text("# comment\nalpha = 0.5\nsamples=20 # inline\n\nlevels=-1,1\n").unwrap();
        let mut c = RunConfig::default();
        c.apply(&map).unwrap();
        assert_eq!(c.train.l2_alpha, 0.5);
        assert_eq!(c.samples, 20);
        assert_eq!(c.levels, vec![-1.0, 1.0]);
        assert!(parse_config_text("novalue\n").is_err());
        assert!(c.set("nonsense", "1").is_err());
        assert!(c.set("samples", "many").is_err());
    }
}
