//! Quasi-Newton mode search, inter-mode distance and the mode atlas.

mod atlas;
mod bfgs;

use rayon::prelude::*;

pub use atlas::{AtlasDocument, ModeAtlas, ModeRecord};
pub use bfgs::{minimize, BfgsOptions, BfgsSolution};

use crate::error::{Error, Result};
use crate::gaussian::{cholesky, sub, CholeskyFactor, Matrix};
use crate::target::TargetDensity;

/// A located mode with its Laplace covariance `Σ = −[∇² log π(μ)]⁻¹`.
#[derive(Clone, Debug)]
pub struct ModeInfo {
    location: Vec<f64>,
    covariance: Matrix,
    factor: CholeskyFactor,
    log_density: f64,
}

impl ModeInfo {
    /// Builds a mode from its location and covariance, checking positive definiteness.
    pub fn new(location: Vec<f64>, covariance: Matrix, log_density: f64) -> Result<Self> {
        if covariance.dim() != location.len() {
            return Err(Error::DimensionMismatch {
                expected: location.len(),
                got: covariance.dim(),
            });
        }
        let factor = cholesky(&covariance)?;
        Ok(Self {
            location,
            covariance,
            factor,
            log_density,
        })
    }

    /// Laplace approximation at `location` using the target's Hessian.
    pub fn at(target: &dyn TargetDensity, location: Vec<f64>) -> Result<Self> {
        let precision = target
            .hessian_log_density(&location)
            .scaled(-1.0)
            .symmetrized();
        let precision_factor = cholesky(&precision).map_err(|_| Error::NotAMinimum {
            location: location.clone(),
        })?;
        let covariance = precision_factor.inverse().symmetrized();
        let log_density = target.log_density(&location);
        Self::new(location, covariance, log_density)
    }

    pub fn location(&self) -> &[f64] {
        &self.location
    }

    pub fn covariance(&self) -> &Matrix {
        &self.covariance
    }

    pub fn factor(&self) -> &CholeskyFactor {
        &self.factor
    }

    /// Cached `log π(μ)`.
    pub fn log_density(&self) -> f64 {
        self.log_density
    }

    pub fn dim(&self) -> usize {
        self.location.len()
    }
}

/// `max{ΔᵀΣ_k⁻¹Δ, ΔᵀΣ_l⁻¹Δ} / d` with `Δ = μ_k − μ_l`.
pub fn mode_distance(mode_k: &ModeInfo, mode_l: &ModeInfo) -> f64 {
    let delta = sub(&mode_k.location, &mode_l.location);
    let d = delta.len() as f64;
    mode_k
        .factor
        .mahalanobis_sq(&delta)
        .max(mode_l.factor.mahalanobis_sq(&delta))
        / d
}

/// `1 + √(2/d)`.
pub fn default_threshold(dim: usize) -> f64 {
    1.0 + (2.0 / dim as f64).sqrt()
}

/// Minimizes `V = −log π` from `start` and returns the mode with its covariance.
pub fn find_mode(target: &dyn TargetDensity, start: &[f64]) -> Result<ModeInfo> {
    find_mode_with(target, start, &BfgsOptions::default())
}

pub fn find_mode_with(
    target: &dyn TargetDensity,
    start: &[f64],
    options: &BfgsOptions,
) -> Result<ModeInfo> {
    let objective = |x: &[f64]| {
        let v = -target.log_density(x);
        let g = target.grad_log_density(x).into_iter().map(|v| -v).collect();
        (v, g)
    };
    let solution = minimize(objective, start, options)?;
    ModeInfo::at(target, solution.point)
}

/// Outcome of one exploration step.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExplorationReport {
    pub new_found: bool,
    /// Indices in the atlas of the modes appended by this step.
    pub appended: Vec<usize>,
    /// Optimizer runs that ended in an error and were skipped.
    pub failures: usize,
}

/// Runs [`find_mode`] from every batch point in parallel, then appends the
/// candidates farther than `threshold` from every atlas mode, in batch order.
/// Weights are recomputed once after the insertions.
pub fn exploration_step(
    batch: &[Vec<f64>],
    atlas: &mut ModeAtlas,
    target: &dyn TargetDensity,
    threshold: f64,
) -> ExplorationReport {
    let candidates: Vec<Result<ModeInfo>> = batch
        .par_iter()
        .map(|start| find_mode(target, start))
        .collect();
    let mut report = ExplorationReport::default();
    for candidate in candidates {
        match candidate {
            Ok(mode) => {
                if atlas.is_new(&mode, threshold) {
                    report.appended.push(atlas.len());
                    atlas.push_unweighted(mode);
                }
            }
            Err(_) => report.failures += 1,
        }
    }
    if !report.appended.is_empty() {
        atlas.recompute_weights();
        report.new_found = true;
    }
    report
}
