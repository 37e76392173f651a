//! Dense Gaussian primitives: Cholesky, multivariate normals, mixtures and
//! kernel density estimates. Everything is carried in log-space.

mod cholesky;
mod kde;
mod matrix;
mod mixture;

pub use cholesky::{cholesky, mvn_logpdf, mvn_sample, CholeskyFactor};
pub(crate) use kde::sq_dist;
pub use kde::{kde_log_density, kde_log_density_at_member};
pub use matrix::Matrix;
pub(crate) use matrix::{dot, norm, sub};
pub use mixture::GaussianMixture;

/// ln(2π)
pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Stable `ln Σ exp(v)`; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Standard normal log-density.
pub fn std_normal_ln_pdf(z: f64) -> f64 {
    -0.5 * z * z - 0.5 * LN_2PI
}

/// `ln Φ(z)` for the standard normal CDF, accurate far into the left tail.
pub fn std_normal_ln_cdf(z: f64) -> f64 {
    if z > 0.0 {
        (-0.5 * libm::erfc(z / std::f64::consts::SQRT_2)).ln_1p()
    } else if z > -20.0 {
        (0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)).ln()
    } else {
        // Asymptotic series for the Mills ratio; the first omitted term is
        // below 1e-16 relative at z = -20.
        let z2 = z * z;
        let series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2)
            + 105.0 / (z2 * z2 * z2 * z2)
            - 945.0 / (z2 * z2 * z2 * z2 * z2);
        -0.5 * z2 - (-z).ln() - 0.5 * LN_2PI + series.ln()
    }
}

/// `φ(z) / Φ(z)`, the derivative of `ln Φ`.
pub fn std_normal_mills(z: f64) -> f64 {
    (std_normal_ln_pdf(z) - std_normal_ln_cdf(z)).exp()
}
