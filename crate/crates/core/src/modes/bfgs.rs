use crate::error::{Error, Result};
use crate::gaussian::{dot, norm};

/// BFGS settings. Convergence is `‖∇f‖ ≤ gradient_tolerance · (1 + |f|)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BfgsOptions {
    pub gradient_tolerance: f64,
    pub max_iterations: usize,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    pub shrink: f64,
    pub initial_step: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            gradient_tolerance: 1e-6,
            max_iterations: 500,
            armijo: 1e-4,
            shrink: 0.5,
            initial_step: 1.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BfgsSolution {
    pub point: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub iterations: usize,
}

/// Minimizes `f` from `start`. `objective` returns `(f(x), ∇f(x))`.
///
/// Uses an identity initial inverse Hessian and Armijo backtracking; a
/// non-finite trial value counts as insufficient decrease.
pub fn minimize<F>(objective: F, start: &[f64], options: &BfgsOptions) -> Result<BfgsSolution>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let n = start.len();
    let mut x = start.to_vec();
    let (mut f, mut g) = objective(&x);
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain(
            "optimizer started outside the support".into(),
        ));
    }
    let mut inv_h = identity(n);

    for iteration in 0..options.max_iterations {
        if norm(&g) <= options.gradient_tolerance * (1.0 + f.abs()) {
            return Ok(BfgsSolution {
                point: x,
                value: f,
                gradient: g,
                iterations: iteration,
            });
        }

        let mut direction = neg_mat_vec(&inv_h, &g, n);
        let mut slope = dot(&g, &direction);
        if !(slope < 0.0) {
            inv_h = identity(n);
            direction = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }

        let mut step = options.initial_step;
        let (x_new, f_new, g_new) = loop {
            let trial: Vec<f64> = x
                .iter()
                .zip(&direction)
                .map(|(a, p)| a + step * p)
                .collect();
            let (ft, gt) = objective(&trial);
            if ft.is_finite()
                && gt.iter().all(|v| v.is_finite())
                && ft <= f + options.armijo * step * slope
            {
                break (trial, ft, gt);
            }
            step *= options.shrink;
            if step < 1e-20 {
                // No representable decrease along the search direction.
                return Err(Error::NotConverged {
                    iterations: iteration,
                    grad_norm: norm(&g),
                });
            }
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            update_inverse_hessian(&mut inv_h, &s, &y, sy, n);
        }
        x = x_new;
        f = f_new;
        g = g_new;
    }

    if norm(&g) <= options.gradient_tolerance * (1.0 + f.abs()) {
        return Ok(BfgsSolution {
            point: x,
            value: f,
            gradient: g,
            iterations: options.max_iterations,
        });
    }
    Err(Error::NotConverged {
        iterations: options.max_iterations,
        grad_norm: norm(&g),
    })
}

fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

fn neg_mat_vec(m: &[f64], v: &[f64], n: usize) -> Vec<f64> {
    m.chunks(n).map(|row| -dot(row, v)).collect()
}

/// `H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ`, `ρ = 1 / sᵀy`.
fn update_inverse_hessian(h: &mut [f64], s: &[f64], y: &[f64], sy: f64, n: usize) {
    let rho = 1.0 / sy;
    let hy: Vec<f64> = h.chunks(n).map(|row| dot(row, y)).collect();
    let yhy = dot(y, &hy);
    let factor = (1.0 + rho * yhy) * rho;
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += factor * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}
