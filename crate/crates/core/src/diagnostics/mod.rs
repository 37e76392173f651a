//! Convergence diagnostics: expectations, exploration rate, marginal KL,
//! grid χ² and the Gaussian-approximation bound.

mod bound;
mod chi2;
mod coverage;
mod kl;
mod metrics;

pub use bound::{gaussian_approx_lower_bound, multimodal_lower_bound};
pub use chi2::{Chi2Estimate, Chi2Grid};
pub use coverage::estimate_z;
pub use kl::{marginal_kl, Grid1d, DENSITY_FLOOR, MIN_GRID_MASS};
pub use metrics::{Metric, MetricRow, MetricsWriter, RunMetrics, METRICS_HEADER};

use crate::sampler::Ensemble;

/// `(1/N) Σ f(x_i)`.
pub fn estimate_expectation(ens: &Ensemble, f: impl Fn(&[f64]) -> f64) -> f64 {
    ens.particles().map(f).sum::<f64>() / ens.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::Level;
    use crate::target::Observable;

    #[test]
    fn expectation_examples() {
        let e = Ensemble::new(2, &[vec![0.0, 8.0], vec![0.0, 2.0]], 0, Level::Target).unwrap();
        assert_eq!(estimate_expectation(&e, |_| 3.5), 3.5);
        assert_eq!(estimate_expectation(&e, |x| Observable::Y.eval(x)), 5.0);
    }

    /// `V(x) = Mx²/2 + (L − M) ln cosh x` has `M ≤ V'' ≤ L` and `V''(0) = L`,
    /// so its Laplace approximation is `N(0, 1/L)`.
    #[test]
    fn bound_is_below_the_grid_minimum_ratio() {
        for (m, l, r) in [
            (0.5, 1.0, 3.0),
            (0.8, 1.0, 4.0),
            (1.0, 2.0, 2.0),
            (0.9, 1.0, 6.0),
        ] {
            let v = |x: f64| m * x * x / 2.0 + (l - m) * x.cosh().ln();
            let n = 10_000;
            let step = 2.0 * r / (n - 1) as f64;
            let xs: Vec<f64> = (0..n).map(|k| -r + step * k as f64).collect();
            // Normalize π on [−R, R] with a fine trapezoid rule.
            let z = xs
                .iter()
                .enumerate()
                .map(|(k, x)| {
                    let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
                    w * (-v(*x)).exp()
                })
                .sum::<f64>()
                * step;
            let laplace =
                |x: f64| (l / (2.0 * std::f64::consts::PI)).sqrt() * (-l * x * x / 2.0).exp();
            let min_ratio = xs
                .iter()
                .map(|x| laplace(*x) / ((-v(*x)).exp() / z))
                .fold(f64::INFINITY, f64::min);
            let bound = gaussian_approx_lower_bound(m, l, r, 1).unwrap();
            assert!(
                min_ratio >= bound,
                "M={m} L={l} R={r}: {min_ratio} < {bound}"
            );
        }
    }
}
