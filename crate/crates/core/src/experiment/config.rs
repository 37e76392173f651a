use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::{Grid1d, Metric};
use crate::error::{Error, Result};
use crate::modes::AtlasDocument;
use crate::sampler::SamplerConfig;
use crate::target::{InitialDistribution, TargetDensity, TargetSpec};

/// Replicate count used when a config does not set one.
pub const DEFAULT_REPLICATES: usize = 10;
/// Exact reference draws for the exploration rate.
pub const DEFAULT_REFERENCE_SAMPLES: usize = 20_000;

/// One experiment: a target, a sampler, what to measure and where to write it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub target: TargetSpec,
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub metrics: Vec<Metric>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    /// Exact target draws `K` for the exploration rate.
    #[serde(default = "default_reference_samples")]
    pub reference_samples: usize,
    /// Ball radius of the exploration rate; defaults to the sampler bandwidth.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_radius: Option<f64>,
    /// Kernel bandwidth of the KL and χ² diagnostics; defaults to the sampler bandwidth.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic_bandwidth: Option<f64>,
    /// Quadrature grid of the marginal KL.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kl_grid: Option<Grid1d>,
    /// One quadrature axis per dimension for the χ² divergence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi2_grid: Option<Vec<Grid1d>>,
    /// Starting distribution of both ensembles; defaults to the target's documented one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialDistribution>,
    /// Modes known before the run; empty when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_atlas: Option<AtlasDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Worker threads; all available cores when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    /// Run replicates concurrently instead of one after another.
    #[serde(default)]
    pub parallel_replicates: bool,
    /// Write ensemble snapshots every this many iterations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<usize>,
}

fn default_replicates() -> usize {
    DEFAULT_REPLICATES
}

fn default_reference_samples() -> usize {
    DEFAULT_REFERENCE_SAMPLES
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self =
            serde_json::from_str(text).map_err(|e| Error::config("config", e.to_string()))?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn z_radius(&self) -> f64 {
        self.z_radius.unwrap_or(self.sampler.h)
    }

    pub fn diagnostic_bandwidth(&self) -> f64 {
        self.diagnostic_bandwidth.unwrap_or(self.sampler.h)
    }

    pub fn initial(&self) -> InitialDistribution {
        self.initial
            .clone()
            .unwrap_or_else(|| self.target.default_initial())
    }

    /// KL grid: the configured one, or the span of the target's known modes
    /// along `coordinate` widened by 10 on each side, at spacing 0.01.
    pub fn kl_grid(&self, target: &dyn TargetDensity, coordinate: usize) -> Grid1d {
        if let Some(g) = self.kl_grid {
            return g;
        }
        let coords: Vec<f64> = target.known_modes().iter().map(|m| m[coordinate]).collect();
        let lo = coords.iter().copied().fold(0.0, f64::min).floor() - 10.0;
        let hi = coords.iter().copied().fold(0.0, f64::max).ceil() + 10.0;
        let points = ((hi - lo) / 0.01).round() as usize + 1;
        Grid1d {
            lo,
            hi,
            points: points | 1,
        }
    }

    /// Checks everything that can be checked without running.
    pub fn validate(&self) -> Result<()> {
        self.sampler.validate()?;
        let target = self.target.build()?;
        let d = target.dim();
        if self.replicates < 1 {
            return Err(Error::config("replicates", "must be at least 1"));
        }
        if self.workers == Some(0) {
            return Err(Error::config("workers", "must be at least 1"));
        }
        if self.snapshot_every == Some(0) {
            return Err(Error::config("snapshot_every", "must be at least 1"));
        }
        for (field, v) in [
            ("z_radius", self.z_radius),
            ("diagnostic_bandwidth", self.diagnostic_bandwidth),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::config(field, "must be positive and finite"));
                }
            }
        }
        self.initial().validate(d)?;
        if let InitialDistribution::Target = self.initial() {
            if target
                .sample_exact(&mut crate::rng::stream(
                    0,
                    crate::rng::StreamRole::Initialization,
                    0,
                ))
                .is_none()
            {
                return Err(Error::config("initial", "target has no exact sampler"));
            }
        }
        if let Some(doc) = &self.initial_atlas {
            crate::modes::ModeAtlas::from_document(doc, Some(target.as_ref()))
                .map_err(|e| Error::config("initial_atlas", e.to_string()))?;
        }
        for metric in &self.metrics {
            self.check_metric(metric, target.as_ref())?;
        }
        if let Some(g) = &self.kl_grid {
            g.validate()
                .map_err(|e| Error::config("kl_grid", e.to_string()))?;
        }
        if let Some(axes) = &self.chi2_grid {
            if axes.len() != d {
                return Err(Error::config("chi2_grid", format!("needs {d} axes")));
            }
            for a in axes {
                a.validate()
                    .map_err(|e| Error::config("chi2_grid", e.to_string()))?;
            }
        }
        Ok(())
    }

    fn check_metric(&self, metric: &Metric, target: &dyn TargetDensity) -> Result<()> {
        let d = target.dim();
        let fail = |msg: String| Err(Error::config("metrics", msg));
        match metric {
            Metric::Expectation(o) if o.min_dim() > d => {
                fail(format!("`{metric}` needs dimension {}", o.min_dim()))
            }
            Metric::Z => {
                if self.reference_samples < 1 {
                    return Err(Error::config("reference_samples", "must be at least 1"));
                }
                let mut rng = crate::rng::stream(0, crate::rng::StreamRole::Reference, 0);
                if target.sample_exact(&mut rng).is_none() {
                    return fail(format!(
                        "`Z` needs exact draws, which `{}` does not offer",
                        self.target.identifier()
                    ));
                }
                Ok(())
            }
            Metric::MarginalKl { coordinate } => {
                if target.marginal_log_density(*coordinate, 0.0).is_none() {
                    return fail(format!("`{metric}` needs a closed-form marginal"));
                }
                Ok(())
            }
            Metric::Chi2 => {
                if d > 2 {
                    return fail("`chi2` is available for d <= 2 only".into());
                }
                if self.chi2_grid.is_none() && !matches!(self.target, TargetSpec::Example1 {}) {
                    return Err(Error::config("chi2_grid", "is required for this target"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::presets;

    #[test]
    fn presets_round_trip_and_validate() {
        for p in presets() {
            let text = p.config.to_json();
            let back = ExperimentConfig::from_json(&text).unwrap();
            assert_eq!(back, p.config, "{}", p.name);
            back.validate().unwrap();
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut v: serde_json::Value =
            serde_json::from_str(&presets()[0].config.to_json()).unwrap();
        v["colour"] = "blue".into();
        assert!(ExperimentConfig::from_json(&v.to_string()).is_err());
        let mut v: serde_json::Value =
            serde_json::from_str(&presets()[0].config.to_json()).unwrap();
        v["sampler"]["temperature"] = 1.into();
        assert!(ExperimentConfig::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn metric_requirements() {
        let mut c = crate::experiment::preset("sur2d-bdec").unwrap();
        c.metrics = vec!["Z".parse().unwrap()];
        assert!(c.validate().is_err());
        c.metrics = vec!["chi2".parse().unwrap()];
        assert!(
            matches!(c.validate(), Err(Error::InvalidConfig { field, .. }) if field == "chi2_grid")
        );
        let mut c = crate::experiment::preset("skew20d-bdec").unwrap();
        c.metrics = vec!["chi2".parse().unwrap()];
        assert!(c.validate().is_err());
    }

    #[test]
    fn default_kl_grid_covers_the_modes() {
        let c = crate::experiment::preset("skew20d-bdec").unwrap();
        let t = c.target.build().unwrap();
        let g = c.kl_grid(t.as_ref(), 0);
        assert_eq!((g.lo, g.hi), (-30.0, 30.0));
        assert_eq!(g.points % 2, 1);
        g.validate().unwrap();
    }
}
