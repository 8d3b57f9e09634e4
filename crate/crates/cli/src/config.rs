//! The TOML run configuration.

use std::collections::BTreeSet;

use chrono::NaiveDate;
use koalition::viz::Theme;
use koalition::{ElectionRules, Party, PartyRegistry, PoolingConfig, DEFAULT_DRAWS};
use serde::{Deserialize, Serialize};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedCoalition {
    pub name: String,
    pub parties: Vec<String>,
}

/// Knobs for the figures that need a date grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlotConfig {
    /// Number of dates in ridgeline and timeline figures, ending at as-of.
    pub history_rows: u32,
    pub history_step_days: u32,
    pub fan_grid_days: u32,
    /// Realizations drawn by `plot --figure parliaments`.
    pub parliaments: usize,
}

impl Default for PlotConfig {
    fn default() -> Self {
        PlotConfig { history_rows: 8, history_step_days: 14, fan_grid_days: 7, parliaments: 6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default = "default_draws")]
    pub draws: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_prior")]
    pub prior_alpha: f64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub election_date: Option<NaiveDate>,
    #[serde(default)]
    pub rules: ElectionRules,
    #[serde(default)]
    pub pooling: PoolingConfig,
    pub parties: Vec<Party>,
    pub other: Party,
    #[serde(default)]
    pub coalitions: Vec<NamedCoalition>,
    #[serde(default)]
    pub plot: PlotConfig,
    #[serde(default)]
    pub theme: Theme,
}

fn default_draws() -> usize {
    DEFAULT_DRAWS
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_prior() -> f64 {
    koalition::DEFAULT_PRIOR_ALPHA
}

fn default_tau() -> f64 {
    koalition::DEFAULT_TAU_DAYS
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config: Config = toml::from_str(text).map_err(|e| ConfigError(e.message().to_owned()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn registry(&self) -> Result<PartyRegistry, ConfigError> {
        PartyRegistry::new(self.parties.clone(), self.other.clone()).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |e: koalition::Error| ConfigError(e.to_string());
        let registry = self.registry()?;
        self.rules.validate().map_err(err)?;
        self.pooling.validate().map_err(err)?;
        self.theme.validate().map_err(err)?;
        if !(self.prior_alpha > 0.0 && self.prior_alpha.is_finite()) {
            return Err(ConfigError(format!("prior_alpha must be positive, got {}", self.prior_alpha)));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(ConfigError(format!("tau must be positive, got {}", self.tau)));
        }
        if self.plot.history_rows == 0 || self.plot.history_step_days == 0 || self.plot.fan_grid_days == 0 {
            return Err(ConfigError("plot grid settings must be positive".into()));
        }
        let mut names = BTreeSet::new();
        for c in &self.coalitions {
            if !names.insert(c.name.as_str()) {
                return Err(ConfigError(format!("coalition `{}` is defined twice", c.name)));
            }
            if c.parties.is_empty() {
                return Err(ConfigError(format!("coalition `{}` has no parties", c.name)));
            }
            for p in &c.parties {
                if registry.index_of(p).is_none() || p == registry.other().id.as_str() {
                    return Err(ConfigError(format!("coalition `{}` names unknown party `{p}`", c.name)));
                }
            }
        }
        Ok(())
    }

    pub fn coalition(&self, name: &str) -> Result<&NamedCoalition, ConfigError> {
        self.coalitions
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| ConfigError(format!("unknown coalition `{name}`")))
    }
}
