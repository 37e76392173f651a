use rand::Rng;
use rand_distr::StandardNormal;

use super::matrix::Matrix;
use super::LN_2PI;
use crate::error::{Error, Result};

/// Lower-triangular factor `L` of a covariance `Σ = L Lᵀ`, with `log|Σ|` cached.
#[derive(Clone, Debug, PartialEq)]
pub struct CholeskyFactor {
    lower: Matrix,
    log_det: f64,
}

/// Factorizes a symmetric matrix.
///
/// A pivot at or below `1e-12 · trace(Σ) / d` is reported as
/// [`Error::NotPositiveDefinite`]; only the lower triangle is read.
pub fn cholesky(sigma: &Matrix) -> Result<CholeskyFactor> {
    let n = sigma.dim();
    let tolerance = 1e-12 * sigma.trace() / n.max(1) as f64;
    let mut lower = Matrix::zeros(n);
    let mut log_det = 0.0;
    for j in 0..n {
        let mut pivot = sigma[(j, j)];
        for k in 0..j {
            pivot -= lower[(j, k)] * lower[(j, k)];
        }
        if !(pivot > tolerance) || !(tolerance > 0.0) {
            return Err(Error::NotPositiveDefinite {
                row: j,
                pivot,
                tolerance,
            });
        }
        let diag = pivot.sqrt();
        lower[(j, j)] = diag;
        log_det += 2.0 * diag.ln();
        for i in (j + 1)..n {
            let mut v = sigma[(i, j)];
            for k in 0..j {
                v -= lower[(i, k)] * lower[(j, k)];
            }
            lower[(i, j)] = v / diag;
        }
    }
    Ok(CholeskyFactor { lower, log_det })
}

impl CholeskyFactor {
    /// Wraps an existing lower-triangular matrix without validation.
    ///
    /// Zero diagonal entries give `log_det = -inf`; such a factor is only
    /// useful for sampling (e.g. the degenerate `L = 0` factor returns the
    /// mean exactly).
    pub fn from_lower(lower: Matrix) -> Self {
        let log_det = (0..lower.dim()).map(|i| 2.0 * lower[(i, i)].ln()).sum();
        Self { lower, log_det }
    }

    pub fn dim(&self) -> usize {
        self.lower.dim()
    }

    pub fn lower(&self) -> &Matrix {
        &self.lower
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// `L Lᵀ`
    pub fn covariance(&self) -> Matrix {
        self.lower.mul(&self.lower.transpose())
    }

    /// Solves `L z = b` by forward substitution.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut z = b.to_vec();
        for i in 0..n {
            let mut v = z[i];
            for k in 0..i {
                v -= self.lower[(i, k)] * z[k];
            }
            z[i] = v / self.lower[(i, i)];
        }
        z
    }

    /// Solves `Lᵀ z = b` by back substitution.
    pub fn solve_upper(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut z = b.to_vec();
        for i in (0..n).rev() {
            let mut v = z[i];
            for k in (i + 1)..n {
                v -= self.lower[(k, i)] * z[k];
            }
            z[i] = v / self.lower[(i, i)];
        }
        z
    }

    /// `Σ⁻¹ b`
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.solve_upper(&self.solve_lower(b))
    }

    /// `Σ⁻¹`
    pub fn inverse(&self) -> Matrix {
        let n = self.dim();
        let mut inv = Matrix::zeros(n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv.symmetrized()
    }

    /// `vᵀ Σ⁻¹ v = ‖L⁻¹ v‖²`
    pub fn mahalanobis_sq(&self, v: &[f64]) -> f64 {
        self.solve_lower(v).iter().map(|z| z * z).sum()
    }
}

/// Log-density of `N(mu, L Lᵀ)` at `x`.
pub fn mvn_logpdf(x: &[f64], mu: &[f64], chol: &CholeskyFactor) -> f64 {
    let d = mu.len();
    debug_assert_eq!(x.len(), d);
    debug_assert_eq!(chol.dim(), d);
    let diff: Vec<f64> = x.iter().zip(mu).map(|(a, b)| a - b).collect();
    -0.5 * d as f64 * LN_2PI - 0.5 * chol.log_det() - 0.5 * chol.mahalanobis_sq(&diff)
}

/// Draws `mu + L ε` with `ε ~ N(0, I)` from `rng`.
pub fn mvn_sample<R: Rng + ?Sized>(rng: &mut R, mu: &[f64], chol: &CholeskyFactor) -> Vec<f64> {
    let d = mu.len();
    let eps: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let lower = chol.lower();
    (0..d)
        .map(|i| mu[i] + (0..=i).map(|k| lower[(i, k)] * eps[k]).sum::<f64>())
        .collect()
}
