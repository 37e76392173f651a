use rand::Rng;

use super::cholesky::{mvn_logpdf, mvn_sample, CholeskyFactor};
use super::log_sum_exp;
use crate::error::{Error, Result};

/// Weighted sum of multivariate normals.
///
/// Weights are normalized on construction and their cumulative sums cached
/// for inverse-CDF component selection.
#[derive(Clone, Debug)]
pub struct GaussianMixture {
    dim: usize,
    means: Vec<Vec<f64>>,
    factors: Vec<CholeskyFactor>,
    weights: Vec<f64>,
    log_weights: Vec<f64>,
    cumulative: Vec<f64>,
}

impl GaussianMixture {
    pub fn new(
        means: Vec<Vec<f64>>,
        factors: Vec<CholeskyFactor>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        if means.is_empty() {
            return Err(Error::EmptyMixture);
        }
        let dim = means[0].len();
        if factors.len() != means.len() || weights.len() != means.len() {
            return Err(Error::DimensionMismatch {
                expected: means.len(),
                got: factors.len().min(weights.len()),
            });
        }
        for (m, f) in means.iter().zip(&factors) {
            if m.len() != dim || f.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: if m.len() != dim { m.len() } else { f.dim() },
                });
            }
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Domain(
                "mixture weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Domain("mixture weights sum to zero".into()));
        }
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let log_weights = weights.iter().map(|w| w.ln()).collect();
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        // Pin the last nonzero entry so a uniform draw in [0, 1) always lands.
        if let Some(last) = weights.iter().rposition(|w| *w > 0.0) {
            for c in &mut cumulative[last..] {
                *c = 1.0;
            }
        }
        Ok(Self {
            dim,
            means,
            factors,
            weights,
            log_weights,
            cumulative,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn factors(&self) -> &[CholeskyFactor] {
        &self.factors
    }

    /// `ln Σ_i w_i N(x; μ_i, Σ_i)`, max-shifted.
    pub fn log_pdf(&self, x: &[f64]) -> f64 {
        let terms = self.component_log_terms(x);
        log_sum_exp(&terms)
    }

    /// `ln w_i + ln N(x; μ_i, Σ_i)` per component (`-inf` for zero weight).
    pub fn component_log_terms(&self, x: &[f64]) -> Vec<f64> {
        self.means
            .iter()
            .zip(&self.factors)
            .zip(&self.log_weights)
            .map(|((m, f), lw)| {
                if *lw == f64::NEG_INFINITY {
                    f64::NEG_INFINITY
                } else {
                    lw + mvn_logpdf(x, m, f)
                }
            })
            .collect()
    }

    /// Index of the component selected by a uniform draw `u ∈ [0, 1)`.
    pub fn select_component(&self, u: f64) -> usize {
        self.cumulative
            .partition_point(|c| *c <= u)
            .min(self.len() - 1)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let i = self.select_component(rng.random::<f64>());
        mvn_sample(rng, &self.means[i], &self.factors[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{cholesky, Matrix};
    use crate::rng::{stream, StreamRole};

    fn example1() -> GaussianMixture {
        let means = vec![
            vec![0.0, 8.0],
            vec![0.0, 2.0],
            vec![-3.0, 5.0],
            vec![3.0, 5.0],
        ];
        let covs = [[1.2, 0.01], [1.2, 0.01], [0.01, 2.0], [0.01, 2.0]];
        let factors = covs
            .iter()
            .map(|c| cholesky(&Matrix::from_diagonal(c)).unwrap())
            .collect();
        GaussianMixture::new(means, factors, vec![0.25; 4]).unwrap()
    }

    #[test]
    fn empty_mixture_is_an_error() {
        assert!(matches!(
            GaussianMixture::new(vec![], vec![], vec![]),
            Err(Error::EmptyMixture)
        ));
    }

    #[test]
    fn single_component_equals_mvn() {
        let f = cholesky(&Matrix::from_diagonal(&[0.5, 3.0])).unwrap();
        let gm = GaussianMixture::new(vec![vec![1.0, -1.0]], vec![f.clone()], vec![1.0]).unwrap();
        let x = [0.3, 0.7];
        assert_close!(gm.log_pdf(&x), mvn_logpdf(&x, &[1.0, -1.0], &f), 1e-14);
    }

    #[test]
    fn duplicated_component_equals_single() {
        let f = cholesky(&Matrix::identity(2)).unwrap();
        let one = GaussianMixture::new(vec![vec![0.0, 0.0]], vec![f.clone()], vec![1.0]).unwrap();
        let two = GaussianMixture::new(vec![vec![0.0, 0.0]; 2], vec![f.clone(), f], vec![0.5, 0.5])
            .unwrap();
        let x = [1.3, -0.2];
        assert_close!(one.log_pdf(&x), two.log_pdf(&x), 1e-14);
    }

    #[test]
    fn example1_matches_naive_summation() {
        let gm = example1();
        for x in [[0.0, 8.0], [0.5, 5.0], [-2.9, 4.5], [1.0, 2.1]] {
            let naive: f64 = gm
                .means()
                .iter()
                .zip(gm.factors())
                .map(|(m, f)| 0.25 * mvn_logpdf(&x, m, f).exp())
                .sum::<f64>()
                .ln();
            assert!((gm.log_pdf(&x) - naive).abs() <= 1e-12 * naive.abs().max(1.0));
        }
    }

    #[test]
    fn zero_weight_component_is_never_selected() {
        let f = cholesky(&Matrix::identity(1)).unwrap();
        let gm = GaussianMixture::new(
            vec![vec![0.0], vec![100.0]],
            vec![f.clone(), f],
            vec![1.0, 0.0],
        )
        .unwrap();
        let mut rng = stream(3, StreamRole::Reference, 0);
        for _ in 0..100_000 {
            assert!(gm.sample(&mut rng)[0] < 50.0);
        }
        assert_eq!(gm.select_component(0.999_999_999), 0);
    }

    #[test]
    fn selection_frequencies_follow_weights() {
        let gm = example1();
        let mut rng = stream(5, StreamRole::Reference, 0);
        let n = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[gm.select_component(rng.random::<f64>())] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 0.25).abs() < 0.01);
        }
    }
}
