use crate::error::{Error, Result};

/// Lower bound on `inf ρ̂/π` for a Gaussian (Laplace) approximation `ρ̂` of
/// a target `π ∝ e^{−V}` on a radius-`R` ball, `V` being `M`-strongly convex
/// and `L`-smooth:
///
/// `(M/L)^{d/2} · [1 − exp(−L(R − √(d/L))²/2)] · exp(−(L − M)R²/2)`.
pub fn gaussian_approx_lower_bound(m: f64, l: f64, r: f64, d: usize) -> Result<f64> {
    let (mass, tail) = bound_factors(m, l, r, d)?;
    Ok(mass * tail)
}

/// Multimodal form over per-mode constants `(M_j, L_j)`: the smallest
/// mass factor times the smallest tail factor.
pub fn multimodal_lower_bound(constants: &[(f64, f64)], r: f64, d: usize) -> Result<f64> {
    if constants.is_empty() {
        return Err(Error::Domain("at least one mode is required".into()));
    }
    let mut mass_min = f64::INFINITY;
    let mut tail_min = f64::INFINITY;
    for &(m, l) in constants {
        let (mass, tail) = bound_factors(m, l, r, d)?;
        mass_min = mass_min.min(mass);
        tail_min = tail_min.min(tail);
    }
    Ok(mass_min * tail_min)
}

fn bound_factors(m: f64, l: f64, r: f64, d: usize) -> Result<(f64, f64)> {
    if !(m > 0.0 && m <= l && l.is_finite()) {
        return Err(Error::Domain(format!(
            "need 0 < M <= L (got M = {m}, L = {l})"
        )));
    }
    if d == 0 {
        return Err(Error::Domain("dimension must be positive".into()));
    }
    let d = d as f64;
    let radius_floor = (d / l).sqrt();
    if !(r >= radius_floor) {
        return Err(Error::Domain(format!(
            "need R >= sqrt(d/L) = {radius_floor} (got R = {r})"
        )));
    }
    let gap = r - radius_floor;
    let mass = (m / l).powf(d / 2.0) * -(-l * gap * gap / 2.0).exp_m1();
    let tail = (-(l - m) * r * r / 2.0).exp();
    Ok((mass, tail))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_approximates_itself() {
        assert_close!(
            gaussian_approx_lower_bound(1.0, 1.0, 10.0, 1).unwrap(),
            1.0 - (-40.5f64).exp(),
            1e-15
        );
    }

    #[test]
    fn direct_evaluation() {
        let want = 0.5f64.sqrt() * (1.0 - (-2.0f64).exp()) * (-2.25f64).exp();
        let got = gaussian_approx_lower_bound(0.5, 1.0, 3.0, 1).unwrap();
        assert_close!(got, want, 1e-15);
        assert_close!(got, 0.0645, 1e-4);
    }

    #[test]
    fn domain_errors() {
        assert!(gaussian_approx_lower_bound(1.0, 1.0, 0.5, 1).is_err());
        assert!(gaussian_approx_lower_bound(2.0, 1.0, 5.0, 1).is_err());
        assert!(gaussian_approx_lower_bound(0.0, 1.0, 5.0, 1).is_err());
        assert!(multimodal_lower_bound(&[], 3.0, 1).is_err());
    }

    #[test]
    fn multimodal_reduces_to_unimodal() {
        let one = multimodal_lower_bound(&[(0.5, 1.0)], 3.0, 1).unwrap();
        assert_eq!(one, gaussian_approx_lower_bound(0.5, 1.0, 3.0, 1).unwrap());
        let two = multimodal_lower_bound(&[(0.5, 1.0), (1.0, 1.0)], 3.0, 1).unwrap();
        assert!(two <= one);
    }
}
