use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::default_threshold;

/// Which particle scheme to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Langevin with birth-death and the exploration component.
    Bdec,
    /// Langevin with birth-death, no tempered ensemble.
    Bdls,
    /// BDEC without birth-death.
    Lec,
    /// Plain unadjusted Langevin.
    Ula,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Bdec,
        Algorithm::Bdls,
        Algorithm::Lec,
        Algorithm::Ula,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Bdec => "bdec",
            Algorithm::Bdls => "bdls",
            Algorithm::Lec => "lec",
            Algorithm::Ula => "ula",
        }
    }

    /// Runs a tempered ensemble and the exploration component.
    pub fn explores(self) -> bool {
        matches!(self, Algorithm::Bdec | Algorithm::Lec)
    }

    pub fn uses_birth_death(self) -> bool {
        matches!(self, Algorithm::Bdec | Algorithm::Bdls)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                Error::config(
                    "algorithm",
                    format!("must be one of bdec, bdls, lec, ula (got `{s}`)"),
                )
            })
    }
}

/// All sampler tunables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    pub algorithm: Algorithm,
    /// Langevin time step Δt.
    pub dt: f64,
    /// Kernel bandwidth h of the birth-death rates.
    pub h: f64,
    /// Inverse temperature of the tempered ensemble.
    pub beta_hot: f64,
    /// Target-level particle count N.
    pub n_particles: usize,
    /// Tempered particle count N̂; defaults to N.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_tempered: Option<usize>,
    /// Iterations J.
    pub iterations: usize,
    /// Within-temperature moves per iteration T.
    pub moves_per_iteration: usize,
    /// Exploration batch size B.
    pub batch_size: usize,
    /// Mode distance threshold; defaults to `1 + √(2/d)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    /// Prepend a Langevin step to each MH + birth-death update.
    #[serde(default)]
    pub langevin_in_insertion: bool,
    pub seed: u64,
}

impl SamplerConfig {
    pub fn n_tempered(&self) -> usize {
        self.n_tempered.unwrap_or(self.n_particles)
    }

    pub fn threshold(&self, dim: usize) -> f64 {
        self.threshold.unwrap_or_else(|| default_threshold(dim))
    }

    /// Total number of updates of the target-level ensemble, `J · T`.
    pub fn total_updates(&self) -> usize {
        self.iterations * self.moves_per_iteration
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.dt) {
            return Err(Error::config(
                "dt",
                format!("must be positive and finite (got {})", self.dt),
            ));
        }
        if !positive(self.h) {
            return Err(Error::config(
                "h",
                format!("must be positive and finite (got {})", self.h),
            ));
        }
        if !(self.beta_hot > 0.0 && self.beta_hot <= 1.0) {
            return Err(Error::config(
                "beta_hot",
                format!("must lie in (0, 1] (got {})", self.beta_hot),
            ));
        }
        if self.n_particles < 2 {
            return Err(Error::config("n_particles", "must be at least 2"));
        }
        if self.moves_per_iteration < 1 {
            return Err(Error::config("moves_per_iteration", "must be at least 1"));
        }
        if self.algorithm.explores() {
            if self.n_tempered() < 1 {
                return Err(Error::config("n_tempered", "must be at least 1"));
            }
            if self.batch_size < 1 || self.batch_size > self.n_tempered() {
                return Err(Error::config(
                    "batch_size",
                    format!(
                        "must lie in 1..={} (the tempered particle count)",
                        self.n_tempered()
                    ),
                ));
            }
        }
        if let Some(t) = self.threshold {
            if !positive(t) {
                return Err(Error::config("threshold", "must be positive and finite"));
            }
        }
        Ok(())
    }
}
