//! Flat `key=value` run configuration.
//!
//! Blank lines and `#` comments are ignored. Every key overrides one default;
//! unknown keys and unparsable values are errors naming the line.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::ExperimentConfig;
use crate::timeseries::YearMonth;

/// Environment variable supplying the seed when neither a flag nor the
/// config file does.
pub const SEED_ENV: &str = "SWARM_FORECAST_SEED";

pub const SWARM_KEYS: [&str; 14] = [
    "swarm_size",
    "c1",
    "c2",
    "sigma",
    "omega0",
    "omega_const",
    "j",
    "k_max",
    "target_fitness",
    "z_min",
    "z_max",
    "n_i1",
    "n_i2",
    "seed",
];

pub const OTHER_KEYS: [&str; 9] = [
    "learning_rate",
    "momentum",
    "max_epochs",
    "target_loss",
    "bp_refine",
    "init_range",
    "window_len",
    "hidden_len",
    "split",
];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub experiment: ExperimentConfig,
    pub seed: u64,
    pub split: Option<YearMonth>,
}

/// Splits `key=value` text into `(line, key, value)` triples.
pub fn parse_key_values(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::MalformedRow {
            line: i + 1,
            message: format!("expected key=value, got `{line}`"),
        })?;
        out.push((i + 1, k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn parse<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::MalformedRow {
        line,
        message: format!("invalid value `{value}` for `{key}`"),
    })
}

impl RunConfig {
    /// Built-in defaults with the seed taken from [`SEED_ENV`] when set.
    pub fn from_env() -> Result<Self> {
        let mut cfg = Self::default();
        if let Ok(v) = std::env::var(SEED_ENV) {
            cfg.seed = v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("{SEED_ENV}=`{v}` is not an unsigned integer")))?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        let e = &mut self.experiment;
        let s = &mut e.hybrid.swarm;
        let b = &mut e.hybrid.bp;
        match key {
            "swarm_size" => s.swarm_size = parse(line, key, value)?,
            "c1" => s.c1 = parse(line, key, value)?,
            "c2" => s.c2 = parse(line, key, value)?,
            "sigma" => s.sigma = parse(line, key, value)?,
            "omega0" => s.omega0 = parse(line, key, value)?,
            "omega_const" => s.omega_const = parse(line, key, value)?,
            "j" => s.sub_steps = parse(line, key, value)?,
            "k_max" => s.k_max = parse(line, key, value)?,
            "target_fitness" => s.target_fitness = parse(line, key, value)?,
            "z_min" => s.z_min = parse(line, key, value)?,
            "z_max" => s.z_max = parse(line, key, value)?,
            "n_i1" => s.n_i1 = Some(parse(line, key, value)?),
            "n_i2" => s.n_i2 = Some(parse(line, key, value)?),
            "seed" => {
                self.seed = parse(line, key, value)?;
                s.seed = self.seed;
            }
            "learning_rate" => b.learning_rate = parse(line, key, value)?,
            "momentum" => b.momentum = parse(line, key, value)?,
            "max_epochs" => b.max_epochs = parse(line, key, value)?,
            "target_loss" => b.target_loss = parse(line, key, value)?,
            "bp_refine" => e.hybrid.bp_refine = parse(line, key, value)?,
            "init_range" => e.hybrid.init_range = parse(line, key, value)?,
            "window_len" => e.window_len = parse(line, key, value)?,
            "hidden_len" => e.hidden_len = parse(line, key, value)?,
            "split" => {
                self.split = Some(value.parse().map_err(|m: String| Error::MalformedRow { line, message: m })?)
            }
            _ => {
                return Err(Error::MalformedRow { line, message: format!("unknown key `{key}`") });
            }
        }
        Ok(())
    }

    /// Applies every line of a config file on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (line, key, value) in parse_key_values(text)? {
            self.set(&key, &value, line)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.experiment.topology()?;
        self.experiment.hybrid.validate()
    }
}
