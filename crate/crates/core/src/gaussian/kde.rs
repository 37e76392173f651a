use super::LN_2PI;

/// Log of the Gaussian kernel density `(1/N) Σ_i K(x_i, x)` with bandwidth `h`.
///
/// `points` is a row-major `N × d` buffer.
pub fn kde_log_density(points: &[f64], dim: usize, h: f64, x: &[f64]) -> f64 {
    debug_assert!(dim > 0 && points.len() % dim == 0);
    let n = points.len() / dim;
    let inv_two_h2 = 1.0 / (2.0 * h * h);
    let exponents: Vec<f64> = points
        .chunks_exact(dim)
        .map(|p| -sq_dist(p, x) * inv_two_h2)
        .collect();
    let max = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = exponents.iter().map(|e| (e - max).exp()).sum();
    log_kernel_norm(dim, h) - (n as f64).ln() + max + sum.ln()
}

/// Same as [`kde_log_density`] evaluated at member `i` of `points`.
///
/// The self-term makes the largest exponent exactly zero, so no shift pass
/// is needed.
pub fn kde_log_density_at_member(points: &[f64], dim: usize, h: f64, i: usize) -> f64 {
    let n = points.len() / dim;
    let x = &points[i * dim..(i + 1) * dim];
    let inv_two_h2 = 1.0 / (2.0 * h * h);
    let sum: f64 = points
        .chunks_exact(dim)
        .map(|p| -sq_dist(p, x) * inv_two_h2)
        .filter(|e| *e > EXP_UNDERFLOW)
        .map(f64::exp)
        .sum();
    log_kernel_norm(dim, h) - (n as f64).ln() + sum.ln()
}

/// Below this exponent `exp` returns exactly zero in `f64`.
const EXP_UNDERFLOW: f64 = -750.0;

/// `-(d/2) ln(2π h²)`
pub(crate) fn log_kernel_norm(dim: usize, h: f64) -> f64 {
    -0.5 * dim as f64 * (LN_2PI + 2.0 * h.ln())
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_at_itself() {
        let h = 0.3;
        let expected = -(2.0 * std::f64::consts::PI * h * h).ln();
        assert_close!(
            kde_log_density(&[1.0, 2.0], 2, h, &[1.0, 2.0]),
            expected,
            1e-14
        );
    }

    #[test]
    fn duplicated_point_is_unchanged() {
        let one = kde_log_density(&[0.5], 1, 0.2, &[0.7]);
        let two = kde_log_density(&[0.5, 0.5], 1, 0.2, &[0.7]);
        assert_close!(one, two, 1e-14);
    }

    #[test]
    fn two_distant_points() {
        // ln(½ (φ(0) + φ(10)))
        let direct = (0.5 * (0.398_942_280_401_432_7 + 7.694_598_626_706_42e-23f64)).ln();
        let v = kde_log_density(&[0.0, 10.0], 1, 1.0, &[0.0]);
        assert_close!(v, direct, 1e-12);
        assert_close!(v, -1.61208, 1e-5);
        assert_close!(kde_log_density_at_member(&[0.0, 10.0], 1, 1.0, 0), v, 1e-14);
    }

    #[test]
    fn far_query_does_not_underflow() {
        let v = kde_log_density(&[0.0, 0.1], 1, 0.05, &[100.0]);
        assert!(v.is_finite());
    }
}
