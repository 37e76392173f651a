use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::LN_2PI;

/// Smallest grid mass of the kernel density accepted by the quadratures.
pub const MIN_GRID_MASS: f64 = 0.999;

/// Densities below this are treated as zero inside the quadratures.
pub const DENSITY_FLOOR: f64 = 1e-300;

/// Kernel tails beyond this many bandwidths are exactly zero in `f64`.
const KERNEL_REACH: f64 = 40.0;

/// Uniform 1D quadrature grid `lo, lo + δ, …, hi` with `points` nodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid1d {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Grid1d {
    pub fn new(lo: f64, hi: f64, points: usize) -> Result<Self> {
        let g = Self { lo, hi, points };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::config("grid", "needs finite lo < hi"));
        }
        if self.points < 3 || self.points % 2 == 0 {
            return Err(Error::config("grid.points", "must be odd and at least 3"));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.points - 1) as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        self.lo + self.step() * k as f64
    }

    /// Trapezoid weight of node `k`.
    pub fn weight(&self, k: usize) -> f64 {
        if k == 0 || k + 1 == self.points {
            0.5 * self.step()
        } else {
            self.step()
        }
    }
}

/// 1D Gaussian kernel density `(1/N) Σ_i N(u; c_i, h²)` over sorted centres.
pub(crate) struct SortedKde {
    centres: Vec<f64>,
    h: f64,
}

impl SortedKde {
    pub(crate) fn new(mut centres: Vec<f64>, h: f64) -> Self {
        centres.sort_by(f64::total_cmp);
        Self { centres, h }
    }

    /// Kernel sum at `u`, skipping centres beyond the reach where the
    /// kernel underflows to zero.
    pub(crate) fn density(&self, u: f64) -> f64 {
        let reach = KERNEL_REACH * self.h;
        let start = self.centres.partition_point(|c| *c < u - reach);
        let end = self.centres.partition_point(|c| *c <= u + reach);
        let inv = 1.0 / self.h;
        let norm = (-0.5 * LN_2PI).exp() * inv / self.centres.len() as f64;
        self.centres[start..end]
            .iter()
            .map(|c| {
                let z = (u - c) * inv;
                (-0.5 * z * z).exp()
            })
            .sum::<f64>()
            * norm
    }
}

/// `KL(ρ¹ ‖ π¹)` of coordinate `coordinate` by trapezoid quadrature, where
/// `ρ¹` is the kernel density of the particles' coordinate with bandwidth `h`
/// and `log_marginal` evaluates `log π¹`.
///
/// Nodes where `ρ¹ < 1e-300` contribute zero. Fails with
/// [`Error::GridTooNarrow`] if `ρ¹` has less than 0.999 of its mass on the grid.
pub fn marginal_kl(
    particles: &[f64],
    dim: usize,
    coordinate: usize,
    log_marginal: impl Fn(f64) -> f64 + Sync,
    h: f64,
    grid: &Grid1d,
) -> Result<f64> {
    grid.validate()?;
    if coordinate >= dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: coordinate + 1,
        });
    }
    let kde = SortedKde::new(
        particles.chunks_exact(dim).map(|p| p[coordinate]).collect(),
        h,
    );
    let (mass, kl) = (0..grid.points)
        .into_par_iter()
        .map(|k| {
            let u = grid.node(k);
            let w = grid.weight(k);
            let rho = kde.density(u);
            if rho < DENSITY_FLOOR {
                (w * rho, 0.0)
            } else {
                (w * rho, w * rho * (rho.ln() - log_marginal(u)))
            }
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0.0, 0.0), |(m, s), (dm, ds)| (m + dm, s + ds));
    if mass < MIN_GRID_MASS {
        return Err(Error::GridTooNarrow { mass });
    }
    Ok(kl)
}
