//! Run configuration: a TOML file merged with command-line overrides.

use std::path::Path;

use ratioshift_core::{Mode, Profile, TailRule};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Environment variable that overrides the configured seed.
pub const SEED_ENV: &str = "RATIOSHIFT_SEED";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum TailName {
    /// Later levels obey the construction's approximation bound.
    Construction,
    /// The last λ repeats forever.
    Constant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub profile: Mode,
    pub lambda1: f64,
    pub levels: usize,
    pub tail: TailName,
    pub seed: u64,
    /// Defaults per experiment when absent.
    pub samples: Option<u64>,
    pub eps: f64,
    pub depth: usize,
    /// Level j whose ratio the ratio-set experiment targets.
    pub target: usize,
    /// One-based digits of the conditioning cylinder.
    pub cylinder: String,
    pub cylinder_start: i64,
    pub shift_count: usize,
    /// Hellinger horizon; defaults to the built levels (64 for a constant tail).
    pub horizon: Option<usize>,
    pub tolerance: f64,
    /// Half-length of torus itineraries.
    pub itinerary: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            profile: Mode::Full,
            lambda1: 1.5,
            levels: 2,
            tail: TailName::Construction,
            seed: 0,
            samples: None,
            eps: 0.05,
            depth: 2,
            target: 1,
            cylinder: "132".into(),
            cylinder_start: -1,
            shift_count: 8,
            horizon: None,
            tolerance: 1e-8,
            itinerary: 10,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Input(format!("bad config {}: {e}", path.display())))
    }

    pub fn check(&self) -> Result<(), CliError> {
        let positive = [("eps", self.eps), ("tolerance", self.tolerance)];
        if let Some((name, _)) = positive.iter().find(|(_, v)| !(*v > 0.0)) {
            return Err(CliError::Input(format!("{name} must be positive")));
        }
        if self.samples == Some(0) {
            return Err(CliError::Input("samples must be positive".into()));
        }
        Ok(())
    }

    pub fn profile(&self) -> Profile {
        let base = match self.profile {
            Mode::Full => Profile::full(),
            Mode::Desk => Profile::desk(),
        };
        Profile { lambda1: self.lambda1, ..base }
    }

    pub fn tail_rule(&self, profile: &Profile) -> TailRule {
        match self.tail {
            TailName::Construction => TailRule::Construction { approximation_cap: profile.approximation_cap },
            TailName::Constant => TailRule::Constant,
        }
    }
}

/// Where the effective seed came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedSource {
    Config,
    Flag,
    Environment,
}

/// Applies the flag, then the environment override, to the configured seed.
pub fn resolve_seed(config: &mut RunConfig, flag: Option<u64>, env: Option<&str>) -> Result<SeedSource, CliError> {
    if let Some(s) = flag {
        config.seed = s;
        return Ok(SeedSource::Flag);
    }
    match env {
        Some(text) => {
            config.seed = text.trim().parse().map_err(|_| CliError::Input(format!("{SEED_ENV} must be an unsigned integer, got {text:?}")))?;
            Ok(SeedSource::Environment)
        }
        None => Ok(SeedSource::Config),
    }
}
