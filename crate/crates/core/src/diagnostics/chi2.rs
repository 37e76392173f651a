use rayon::prelude::*;
use serde::Serialize;

use super::kl::{Grid1d, SortedKde, DENSITY_FLOOR, MIN_GRID_MASS};
use crate::error::{Error, Result};
use crate::gaussian::{log_sum_exp, LN_2PI};
use crate::target::TargetDensity;

/// Kernel support on the grid, in bandwidths.
const GRID_KERNEL_REACH: f64 = 10.0;

/// `χ²(ρ ‖ π)` with its bookkeeping.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Chi2Estimate {
    /// `∫ ρ²/π − 1` over the grid cells where `π ≥ 1e-300`.
    pub divergence: f64,
    /// Mass of `ρ` on cells where `π < 1e-300`, left out of the divergence.
    pub clipped_mass: f64,
    /// Total mass of `ρ` on the grid.
    pub kde_mass: f64,
}

/// Tensor-product trapezoid grid in one or two dimensions carrying the
/// target density, normalized by quadrature on the same grid.
#[derive(Clone, Debug)]
pub struct Chi2Grid {
    axes: Vec<Grid1d>,
    /// Normalized `π` at the nodes, first axis outermost.
    pi: Vec<f64>,
    weights: Vec<f64>,
}

impl Chi2Grid {
    pub fn new(target: &dyn TargetDensity, axes: Vec<Grid1d>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 || axes.len() != target.dim() {
            return Err(Error::config(
                "grid",
                format!(
                    "chi2 needs one axis per dimension for d <= 2 (d = {})",
                    target.dim()
                ),
            ));
        }
        for a in &axes {
            a.validate()?;
        }
        let nodes = node_list(&axes);
        let log_pi: Vec<f64> = nodes.par_iter().map(|p| target.log_density(p)).collect();
        let weights: Vec<f64> = node_weights(&axes);
        let log_terms: Vec<f64> = log_pi
            .iter()
            .zip(&weights)
            .map(|(l, w)| l + w.ln())
            .collect();
        let log_z = log_sum_exp(&log_terms);
        if !log_z.is_finite() {
            return Err(Error::Domain("target has no mass on the chi2 grid".into()));
        }
        let pi = log_pi.iter().map(|l| (l - log_z).exp()).collect();
        Ok(Self { axes, pi, weights })
    }

    /// Example 1 grid: x ∈ [−4.5, 4.5], y ∈ [−1, 11], 501 × 501 nodes.
    pub fn example1(target: &dyn TargetDensity) -> Result<Self> {
        Self::new(
            target,
            vec![Grid1d::new(-4.5, 4.5, 501)?, Grid1d::new(-1.0, 11.0, 501)?],
        )
    }

    pub fn axes(&self) -> &[Grid1d] {
        &self.axes
    }

    /// Normalized target density at the nodes.
    pub fn target_values(&self) -> &[f64] {
        &self.pi
    }

    /// Node coordinates, first axis outermost.
    pub fn nodes(&self) -> Vec<Vec<f64>> {
        node_list(&self.axes)
    }

    /// Divergence of the Gaussian kernel density of `particles` (bandwidth `h`,
    /// kernels cut at 10 h). Fails with [`Error::GridTooNarrow`] when less
    /// than 0.999 of the kernel mass falls on the grid.
    pub fn divergence(&self, particles: &[f64], h: f64) -> Result<Chi2Estimate> {
        let rho = match self.axes.len() {
            1 => {
                let kde = SortedKde::new(particles.to_vec(), h);
                (0..self.axes[0].points)
                    .into_par_iter()
                    .map(|k| kde.density(self.axes[0].node(k)))
                    .collect()
            }
            _ => self.kde_2d(particles, h),
        };
        let est = self.divergence_of(&rho);
        if est.kde_mass < MIN_GRID_MASS {
            return Err(Error::GridTooNarrow { mass: est.kde_mass });
        }
        Ok(est)
    }

    /// Divergence of a density given by its node values.
    pub fn divergence_of(&self, rho: &[f64]) -> Chi2Estimate {
        let mut integral = 0.0;
        let mut clipped_mass = 0.0;
        let mut kde_mass = 0.0;
        for ((r, p), w) in rho.iter().zip(&self.pi).zip(&self.weights) {
            kde_mass += w * r;
            if *p < DENSITY_FLOOR {
                clipped_mass += w * r;
            } else {
                integral += w * r * r / p;
            }
        }
        Chi2Estimate {
            divergence: integral - 1.0,
            clipped_mass,
            kde_mass,
        }
    }

    /// Separable kernel sum: each node row along the first axis adds
    /// `k_x · k_y` for the particles within reach of that row.
    fn kde_2d(&self, particles: &[f64], h: f64) -> Vec<f64> {
        let (gx, gy) = (self.axes[0], self.axes[1]);
        let n = particles.len() / 2;
        let reach = GRID_KERNEL_REACH * h;
        let inv = 1.0 / h;
        let norm = (-LN_2PI).exp() * inv * inv / n as f64;

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| particles[2 * a].total_cmp(&particles[2 * b]));
        let xs: Vec<f64> = order.iter().map(|&i| particles[2 * i]).collect();
        // Per particle: first y node within reach and kernel values from there.
        let y_segments: Vec<(usize, Vec<f64>)> = order
            .iter()
            .map(|&i| {
                let y = particles[2 * i + 1];
                let (lo, hi) = node_range(&gy, y - reach, y + reach);
                let vals = (lo..hi)
                    .map(|k| {
                        let z = (gy.node(k) - y) * inv;
                        (-0.5 * z * z).exp()
                    })
                    .collect();
                (lo, vals)
            })
            .collect();

        (0..gx.points)
            .into_par_iter()
            .flat_map_iter(|ix| {
                let u = gx.node(ix);
                let mut row = vec![0.0; gy.points];
                let start = xs.partition_point(|x| *x < u - reach);
                let end = xs.partition_point(|x| *x <= u + reach);
                for p in start..end {
                    let z = (u - xs[p]) * inv;
                    let kx = (-0.5 * z * z).exp() * norm;
                    let (lo, vals) = &y_segments[p];
                    for (cell, ky) in row[*lo..lo + vals.len()].iter_mut().zip(vals) {
                        *cell += kx * ky;
                    }
                }
                row
            })
            .collect()
    }
}

/// Node index range `[lo, hi)` covering `[a, b]`.
fn node_range(g: &Grid1d, a: f64, b: f64) -> (usize, usize) {
    let step = g.step();
    let lo = ((a - g.lo) / step).ceil().max(0.0) as usize;
    let hi = (((b - g.lo) / step).floor() + 1.0).clamp(0.0, g.points as f64) as usize;
    (lo.min(hi), hi)
}

fn node_list(axes: &[Grid1d]) -> Vec<Vec<f64>> {
    match axes {
        [a] => (0..a.points).map(|k| vec![a.node(k)]).collect(),
        [a, b] => (0..a.points)
            .flat_map(|i| (0..b.points).map(move |j| vec![a.node(i), b.node(j)]))
            .collect(),
        _ => unreachable!("grid dimension is checked on construction"),
    }
}

fn node_weights(axes: &[Grid1d]) -> Vec<f64> {
    match axes {
        [a] => (0..a.points).map(|k| a.weight(k)).collect(),
        [a, b] => (0..a.points)
            .flat_map(|i| (0..b.points).map(move |j| a.weight(i) * b.weight(j)))
            .collect(),
        _ => unreachable!("grid dimension is checked on construction"),
    }
}
