use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{mode_distance, ModeInfo};
use crate::error::{Error, Result};
use crate::gaussian::{GaussianMixture, Matrix};
use crate::target::TargetDensity;

/// Discovered modes with their mixture weights and the Gaussian mixture
/// proposal they define.
#[derive(Clone, Debug)]
pub struct ModeAtlas {
    dim: usize,
    modes: Vec<ModeInfo>,
    weights: Vec<f64>,
    mixture: Option<GaussianMixture>,
}

impl ModeAtlas {
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            modes: Vec::new(),
            weights: Vec::new(),
            mixture: None,
        }
    }

    pub fn from_modes(dim: usize, modes: Vec<ModeInfo>) -> Result<Self> {
        if let Some(m) = modes.iter().find(|m| m.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: m.dim(),
            });
        }
        let mut atlas = Self {
            dim,
            modes,
            weights: Vec::new(),
            mixture: None,
        };
        atlas.recompute_weights();
        Ok(atlas)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[ModeInfo] {
        &self.modes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// The mixture proposal `ρ̂`.
    pub fn mixture(&self) -> Result<&GaussianMixture> {
        self.mixture.as_ref().ok_or(Error::EmptyAtlas)
    }

    /// Whether `candidate` is farther than `threshold` from every mode.
    pub fn is_new(&self, candidate: &ModeInfo, threshold: f64) -> bool {
        self.modes
            .iter()
            .all(|m| mode_distance(candidate, m) > threshold)
    }

    pub(super) fn push_unweighted(&mut self, mode: ModeInfo) {
        self.modes.push(mode);
    }

    /// Softmax of `log π(μ_j) + ½ log|Σ_j|`, also rebuilding the mixture.
    pub fn recompute_weights(&mut self) {
        self.weights = weights_for(&self.modes);
        self.mixture = if self.modes.is_empty() {
            None
        } else {
            Some(
                GaussianMixture::new(
                    self.modes.iter().map(|m| m.location().to_vec()).collect(),
                    self.modes.iter().map(|m| m.factor().clone()).collect(),
                    self.weights.clone(),
                )
                .expect("atlas modes share one dimension"),
            )
        };
    }

    /// Checks the stored weights against a fresh evaluation.
    pub fn weights_are_consistent(&self, tolerance: f64) -> bool {
        let fresh = weights_for(&self.modes);
        let sum: f64 = self.weights.iter().sum();
        fresh.len() == self.weights.len()
            && fresh
                .iter()
                .zip(&self.weights)
                .all(|(a, b)| (a - b).abs() <= tolerance)
            && (self.is_empty() || (sum - 1.0).abs() <= tolerance)
    }

    pub fn to_document(&self) -> AtlasDocument {
        AtlasDocument {
            dim: self.dim,
            modes: self
                .modes
                .iter()
                .map(|m| ModeRecord {
                    location: m.location().to_vec(),
                    covariance: m.covariance().as_row_major().to_vec(),
                    log_density: Some(m.log_density()),
                })
                .collect(),
            weights: self.weights.clone(),
        }
    }

    /// Rebuilds an atlas from a document. With a target, `log π(μ)` is
    /// re-evaluated; otherwise the stored values are required.
    pub fn from_document(doc: &AtlasDocument, target: Option<&dyn TargetDensity>) -> Result<Self> {
        let d = doc.dim;
        if let Some(t) = target {
            if t.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: t.dim(),
                    got: d,
                });
            }
        }
        let modes = doc
            .modes
            .iter()
            .enumerate()
            .map(|(k, rec)| {
                if rec.location.len() != d || rec.covariance.len() != d * d {
                    return Err(Error::config(
                        format!("atlas.modes[{k}]"),
                        format!(
                            "needs a {d}-vector location and {} covariance entries",
                            d * d
                        ),
                    ));
                }
                let log_density = match (target, rec.log_density) {
                    (Some(t), _) => t.log_density(&rec.location),
                    (None, Some(v)) => v,
                    (None, None) => {
                        return Err(Error::config(
                            format!("atlas.modes[{k}].log_density"),
                            "is required",
                        ))
                    }
                };
                let cov = Matrix::from_row_major(d, rec.covariance.clone());
                ModeInfo::new(rec.location.clone(), cov, log_density)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_modes(d, modes)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(&self.to_document())?;
        fs::write(path, json).map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn load(path: &Path, target: Option<&dyn TargetDensity>) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let doc: AtlasDocument = serde_json::from_str(&text)?;
        Self::from_document(&doc, target)
    }
}

fn weights_for(modes: &[ModeInfo]) -> Vec<f64> {
    if modes.is_empty() {
        return Vec::new();
    }
    let scores: Vec<f64> = modes
        .iter()
        .map(|m| m.log_density() + 0.5 * m.factor().log_det())
        .collect();
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / total).collect()
}

/// JSON form of an atlas; covariances are row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtlasDocument {
    pub dim: usize,
    pub modes: Vec<ModeRecord>,
    /// Informational; weights are recomputed on load.
    #[serde(default)]
    pub weights: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeRecord {
    pub location: Vec<f64>,
    pub covariance: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_density: Option<f64>,
}
