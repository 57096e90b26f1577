//! Run configuration: one TOML file covering the scenario, reward design,
//! training, emissions and evaluation.
//!
//! Every section and key is optional and falls back to its default. Unknown
//! keys are rejected. Floating-point keys must be written with a decimal
//! point (`1500.0`, not `1500`).

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{EnvConfig, RewardWeights};
use crate::metrics::EmissionCoefficients;
use crate::ppo::TrainConfig;
use crate::road::{DriverParams, InflowSpec, RoadNetwork, Scenario, SimParams};

pub const CONFIG_VERSION: u32 = 1;
/// File name of the config echo written into every run directory.
pub const ECHO_FILE: &str = "config.toml";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("unsupported config_version {found} (expected {CONFIG_VERSION})")]
    Version { found: u32 },
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Named inflow levels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    NoCongestion,
    Moderate,
    Extreme,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::NoCongestion, Preset::Moderate, Preset::Extreme];

    pub fn vphpl(self) -> f64 {
        match self {
            Preset::NoCongestion => 900.0,
            Preset::Moderate => 1200.0,
            Preset::Extreme => 1500.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::NoCongestion => "no_congestion",
            Preset::Moderate => "moderate",
            Preset::Extreme => "extreme",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown preset {s:?} (expected no_congestion, moderate or extreme)"))
    }
}

/// Parses `--inflow`: a preset name or a rate in veh/h/lane.
pub fn parse_inflow(s: &str) -> Result<f64, String> {
    if let Ok(p) = s.parse::<Preset>() {
        return Ok(p.vphpl());
    }
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("invalid inflow {s:?}: expected a preset name or a non-negative rate")),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub episodes: usize,
    /// Density-map bin width, m.
    pub density_bin: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            episodes: 30,
            density_bin: 10.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub config_version: u32,
    /// Base seed; worlds, episodes and the network init derive from it.
    pub seed: u64,
    pub out_dir: PathBuf,
    pub network: RoadNetwork,
    pub inflow: InflowSpec,
    pub driver: DriverParams,
    pub sim: SimParams,
    pub reward: RewardWeights,
    pub train: TrainConfig,
    pub emissions: EmissionCoefficients,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            config_version: CONFIG_VERSION,
            seed: 1,
            out_dir: PathBuf::from("runs"),
            network: RoadNetwork::default(),
            inflow: InflowSpec::default(),
            driver: DriverParams::default(),
            sim: SimParams::default(),
            reward: RewardWeights::default(),
            train: TrainConfig::default(),
            emissions: EmissionCoefficients::default(),
            eval: EvalConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        let c: RunConfig = toml::from_str(s).map_err(|e| ConfigError::Parse(e.message().trim().to_string()))?;
        if c.config_version != CONFIG_VERSION {
            return Err(ConfigError::Version { found: c.config_version });
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.scenario().validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.train.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if !(self.eval.density_bin > 0.0 && self.eval.density_bin.is_finite()) {
            return Err(ConfigError::Invalid("eval.density_bin must be positive".into()));
        }
        Ok(())
    }

    pub fn scenario(&self) -> Scenario {
        Scenario {
            network: self.network.clone(),
            inflow: self.inflow.clone(),
            driver: self.driver.clone(),
            sim: self.sim.clone(),
        }
    }

    pub fn env_config(&self) -> EnvConfig {
        EnvConfig {
            scenario: self.scenario(),
            reward: self.reward.clone(),
        }
    }

    /// Same per-lane rate on the mainline and the on-ramp.
    pub fn set_inflow(&mut self, vphpl: f64) {
        self.inflow.freeway_rate = vphpl;
        self.inflow.ramp_rate = vphpl;
    }

    /// The config as TOML, re-loadable with [`RunConfig::from_toml_str`].
    pub fn echo(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_all_defaults() {
        assert_eq!(RunConfig::from_toml_str("").unwrap(), RunConfig::default());
    }

    #[test]
    fn echo_round_trips() {
        let mut c = RunConfig::default();
        c.seed = 77;
        c.set_inflow(1500.0);
        c.train.iterations = 3;
        let back = RunConfig::from_toml_str(&c.echo()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_keys_are_named() {
        let e = RunConfig::from_toml_str("[train]\nlearning_rat = 0.1\n").unwrap_err();
        assert!(e.to_string().contains("learning_rat"), "{e}");
        let e = RunConfig::from_toml_str("sed = 3\n").unwrap_err();
        assert!(e.to_string().contains("sed"), "{e}");
    }

    #[test]
    fn version_is_checked() {
        assert!(matches!(
            RunConfig::from_toml_str("config_version = 2\n"),
            Err(ConfigError::Version { found: 2 })
        ));
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(RunConfig::from_toml_str("[sim]\ndt = -0.2\n").is_err());
        assert!(RunConfig::from_toml_str("[eval]\ndensity_bin = 0.0\n").is_err());
    }

    #[test]
    fn presets() {
        assert_eq!(parse_inflow("no_congestion").unwrap(), 900.0);
        assert_eq!(parse_inflow("moderate").unwrap(), 1200.0);
        assert_eq!(parse_inflow("extreme").unwrap(), 1500.0);
        assert_eq!(parse_inflow("1350").unwrap(), 1350.0);
        assert!(parse_inflow("heavy").is_err());
        assert!(parse_inflow("-5").is_err());
    }

    #[test]
    fn echo_shows_speed_limits_to_four_decimals() {
        let echo = RunConfig::default().echo();
        assert!(echo.contains("freeway_speed_limit = 29.0576"), "{echo}");
        assert!(echo.contains("ramp_speed_limit = 17.8816"), "{echo}");
    }
}
