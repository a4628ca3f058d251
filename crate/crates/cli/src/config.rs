//! JSON run configuration.
//!
//! Every section rejects unknown keys; parse failures report the JSON path
//! and line/column of the offending value, and model-level invariants are
//! checked immediately after parsing with the failing field named.

use std::path::Path;

use clap::ValueEnum;
use credbond::oracles::Monitoring;
use credbond::{BondSpec, MarketState, ModelParams, OptionSpec, PricingError};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub theta: f64,
    pub mu: f64,
    pub s_r: f64,
    pub s_v: f64,
    pub rho: f64,
    pub barrier_b: f64,
    pub recovery_r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BondConfig {
    pub maturity_t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionConfig {
    pub expiry_t1: f64,
    pub exercise_e: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    pub r: f64,
    pub v: f64,
    pub t: f64,
}

/// Variable swept by the `sweep` command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
pub enum Axis {
    #[serde(rename = "r")]
    #[value(name = "r")]
    Rate,
    #[serde(rename = "V")]
    #[value(name = "V")]
    FirmValue,
    #[serde(rename = "t")]
    #[value(name = "t")]
    Time,
    #[serde(rename = "E")]
    #[value(name = "E")]
    Exercise,
    #[serde(rename = "B")]
    #[value(name = "B")]
    Barrier,
    #[serde(rename = "R")]
    #[value(name = "R")]
    Recovery,
    #[serde(rename = "rho")]
    #[value(name = "rho")]
    Rho,
    #[serde(rename = "s_V")]
    #[value(name = "s_V")]
    FirmVol,
}

impl Axis {
    pub fn label(self) -> &'static str {
        match self {
            Axis::Rate => "r",
            Axis::FirmValue => "V",
            Axis::Time => "t",
            Axis::Exercise => "E",
            Axis::Barrier => "B",
            Axis::Recovery => "R",
            Axis::Rho => "rho",
            Axis::FirmVol => "s_V",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: Axis,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl SweepConfig {
    pub fn validate(&self) -> CliResult<()> {
        if self.n < 2 {
            return Err(CliError::Config(format!("sweep.n: need at least 2 points (got {})", self.n)));
        }
        if !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(CliError::Config("sweep.lo/sweep.hi: bounds must be finite".into()));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let step = (self.hi - self.lo) / (self.n - 1) as f64;
        (0..self.n).map(|i| if i + 1 == self.n { self.hi } else { self.lo + i as f64 * step }).collect()
    }
}

/// Oracle settings for `verify`; every field has a default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub paths: u64,
    pub steps_per_year: usize,
    pub seed: u64,
    pub antithetic: bool,
    pub monitoring: Monitoring,
    /// Space and time steps for the straight-bond grid.
    pub fd_space: usize,
    pub fd_time: usize,
    /// Space and time steps for the option grids (payoff kink at `L`).
    pub fd_option_space: usize,
    pub fd_option_time: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            paths: 200_000,
            steps_per_year: 500,
            seed: 0,
            antithetic: false,
            monitoring: Monitoring::Bridge,
            fd_space: 800,
            fd_time: 800,
            fd_option_space: 1600,
            fd_option_time: 1600,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub bond: BondConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub option: Option<OptionConfig>,
    pub state: StateConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyConfig>,
}

fn prefixed(section: &str, err: PricingError) -> CliError {
    match err {
        PricingError::InvalidParams { field, reason } => CliError::Config(format!("{section}.{field}: {reason}")),
        other => CliError::Config(format!("{section}: {other}")),
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|err| {
            let path = err.path().to_string();
            let inner = err.into_inner();
            CliError::Config(format!("{path}: {inner}"))
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|err| CliError::Config(format!("cannot read {}: {err}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks the invariants that do not depend on the evaluation point.
    pub fn validate(&self) -> CliResult<()> {
        self.params()?;
        self.bond_spec()?;
        let s = &self.state;
        for (name, value) in [("state.r", s.r), ("state.v", s.v), ("state.t", s.t)] {
            if !value.is_finite() {
                return Err(CliError::Config(format!("{name}: must be finite (got {value})")));
            }
        }
        if let Some(option) = &self.option {
            if !option.exercise_e.is_finite() {
                return Err(CliError::Config("option.exercise_e: must be finite".into()));
            }
            if !(option.expiry_t1 > 0.0 && option.expiry_t1 < self.bond.maturity_t) {
                return Err(CliError::Config(format!(
                    "option.expiry_t1: expiry {} must lie strictly inside (0, {})",
                    option.expiry_t1, self.bond.maturity_t
                )));
            }
        }
        if let Some(sweep) = &self.sweep {
            sweep.validate()?;
        }
        Ok(())
    }

    pub fn params(&self) -> CliResult<ModelParams> {
        let m = &self.model;
        ModelParams::new(m.theta, m.mu, m.s_r, m.s_v, m.rho, m.barrier_b, m.recovery_r)
            .map_err(|err| prefixed("model", err))
    }

    pub fn bond_spec(&self) -> CliResult<BondSpec> {
        BondSpec::new(self.bond.maturity_t).map_err(|err| prefixed("bond", err))
    }

    pub fn option_spec(&self) -> CliResult<OptionSpec> {
        let option = self
            .option
            .ok_or_else(|| CliError::Config("option: section required for this instrument".into()))?;
        Ok(OptionSpec::new(option.expiry_t1, option.exercise_e))
    }

    pub fn market_state(&self) -> MarketState {
        MarketState::new(self.state.r, self.state.v, self.state.t)
    }

    pub fn verify_settings(&self) -> VerifyConfig {
        self.verify.unwrap_or_default()
    }

    /// Copy of the configuration with one variable replaced.
    pub fn with_axis(&self, axis: Axis, value: f64) -> CliResult<Self> {
        let mut next = *self;
        match axis {
            Axis::Rate => next.state.r = value,
            Axis::FirmValue => next.state.v = value,
            Axis::Time => next.state.t = value,
            Axis::Exercise => match next.option.as_mut() {
                Some(option) => option.exercise_e = value,
                None => return Err(CliError::Config("option: section required to sweep E".into())),
            },
            Axis::Barrier => next.model.barrier_b = value,
            Axis::Recovery => next.model.recovery_r = value,
            Axis::Rho => next.model.rho = value,
            Axis::FirmVol => next.model.s_v = value,
        }
        Ok(next)
    }
}
