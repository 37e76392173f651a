use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::Ensemble;
use crate::error::Result;
use crate::gaussian::kde_log_density_at_member;
use crate::modes::ModeAtlas;
use crate::rng::Stream;
use crate::target::TargetDensity;

/// Fresh-noise retries of a Langevin move that leaves the support.
pub const MAX_LANGEVIN_RETRIES: usize = 10;

/// Noise source of the Langevin step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Noise {
    #[default]
    Gaussian,
    /// Drift only; for checking the deterministic part of the update.
    Zero,
}

/// `x' = x + dt·β·∇log π(x) + √(2dt)·ε` for every particle, each drawing `ε`
/// from its own stream.
///
/// A move whose result is non-finite or has `log π = -inf` is redrawn up to
/// [`MAX_LANGEVIN_RETRIES`] times; after that the particle stays put.
/// Returns the number of particles left in place.
pub fn ula_step(
    ens: &mut Ensemble,
    target: &dyn TargetDensity,
    beta: f64,
    dt: f64,
    noise: Noise,
) -> usize {
    let dim = ens.dim();
    let (positions, streams, _) = ens.parts_mut();
    let stuck = positions
        .par_chunks_exact_mut(dim)
        .zip(streams.par_iter_mut())
        .map(|(x, rng)| usize::from(!langevin_move(x, rng, target, beta, dt, noise)))
        .sum();
    ens.advance();
    stuck
}

fn langevin_move(
    x: &mut [f64],
    rng: &mut Stream,
    target: &dyn TargetDensity,
    beta: f64,
    dt: f64,
    noise: Noise,
) -> bool {
    let grad = target.grad_log_density(x);
    if grad.iter().any(|g| !g.is_finite()) {
        return false;
    }
    let scale = (2.0 * dt).sqrt();
    let drift: Vec<f64> = x
        .iter()
        .zip(&grad)
        .map(|(xi, g)| xi + dt * beta * g)
        .collect();
    let mut proposal = drift.clone();
    for _ in 0..=MAX_LANGEVIN_RETRIES {
        if noise == Noise::Gaussian {
            for (p, m) in proposal.iter_mut().zip(&drift) {
                *p = m + scale * rng.sample::<f64, _>(StandardNormal);
            }
        }
        if proposal.iter().all(|v| v.is_finite())
            && target.log_density(&proposal) > f64::NEG_INFINITY
        {
            x.copy_from_slice(&proposal);
            return true;
        }
        if noise == Noise::Zero {
            break;
        }
    }
    false
}

/// Birth-death rates `r_i = log((1/N) Σ_l K(x_i − x_l)) − log π(x_i)`,
/// self-term included.
pub fn birth_death_rates(
    positions: &[f64],
    dim: usize,
    target: &dyn TargetDensity,
    h: f64,
) -> Vec<f64> {
    let n = positions.len() / dim;
    (0..n)
        .into_par_iter()
        .map(|i| {
            kde_log_density_at_member(positions, dim, h, i)
                - target.log_density(&positions[i * dim..(i + 1) * dim])
        })
        .collect()
}

/// Probability `1 − exp(−|r − r̄|·dt)` of a kill (`r > r̄`) or duplication (`r ≤ r̄`).
pub fn birth_death_probability(rate: f64, mean_rate: f64, dt: f64) -> f64 {
    -(-(rate - mean_rate).abs() * dt).exp_m1()
}

/// Counts of one birth-death step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BirthDeathStats {
    pub kills: usize,
    pub duplications: usize,
}

/// One birth-death adjustment.
///
/// Rates come from the positions before the step. Particles are then visited
/// in index order with immediate effect: an over-represented particle is
/// killed and replaced by a copy of a uniformly chosen other particle; an
/// under-represented one is copied over a uniformly chosen other particle.
pub fn birth_death_step(
    ens: &mut Ensemble,
    target: &dyn TargetDensity,
    h: f64,
    dt: f64,
) -> BirthDeathStats {
    birth_death_step_scaled(ens, target, h, dt, 1.0)
}

/// [`birth_death_step`] with every event probability multiplied by `scale`.
/// `scale = 0` keeps the random draws but never moves a particle.
pub fn birth_death_step_scaled(
    ens: &mut Ensemble,
    target: &dyn TargetDensity,
    h: f64,
    dt: f64,
    scale: f64,
) -> BirthDeathStats {
    let dim = ens.dim();
    let n = ens.len();
    let rates = birth_death_rates(ens.positions(), dim, target, h);
    let mean_rate = rates.iter().sum::<f64>() / n as f64;
    let (positions, _, rng) = ens.parts_mut();
    let mut stats = BirthDeathStats::default();
    for (i, &rate) in rates.iter().enumerate() {
        let u: f64 = rng.random();
        if u >= scale * birth_death_probability(rate, mean_rate, dt) {
            continue;
        }
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let (from, to) = if rate > mean_rate {
            stats.kills += 1;
            (j, i)
        } else {
            stats.duplications += 1;
            (i, j)
        };
        positions.copy_within(from * dim..(from + 1) * dim, to * dim);
    }
    ens.advance();
    stats
}

/// Log acceptance `min{0, log π(z) + log ρ̂(x) − log π(x) − log ρ̂(z)}` of the
/// move `x → z` with `z ~ ρ̂`; `-inf` when `log π(z)` is not finite.
pub fn mh_log_acceptance(log_pi_x: f64, log_pi_z: f64, log_rho_x: f64, log_rho_z: f64) -> f64 {
    if !log_pi_z.is_finite() {
        return f64::NEG_INFINITY;
    }
    let a = log_pi_z + log_rho_x - log_pi_x - log_rho_z;
    if a.is_nan() {
        f64::NEG_INFINITY
    } else {
        a.min(0.0)
    }
}

/// Independence Metropolis-Hastings step with the atlas mixture as proposal.
/// Returns the fraction of accepted proposals.
pub fn mh_mixture_step(
    ens: &mut Ensemble,
    target: &dyn TargetDensity,
    atlas: &ModeAtlas,
) -> Result<f64> {
    let mixture = atlas.mixture()?;
    let dim = ens.dim();
    let n = ens.len();
    let (positions, streams, _) = ens.parts_mut();
    let accepted: usize = positions
        .par_chunks_exact_mut(dim)
        .zip(streams.par_iter_mut())
        .map(|(x, rng)| {
            let z = mixture.sample(rng);
            let u: f64 = rng.random();
            let log_a = mh_log_acceptance(
                target.log_density(x),
                target.log_density(&z),
                mixture.log_pdf(x),
                mixture.log_pdf(&z),
            );
            if u < log_a.exp() {
                x.copy_from_slice(&z);
                1
            } else {
                0
            }
        })
        .sum();
    ens.advance();
    Ok(accepted as f64 / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::Matrix;
    use crate::modes::ModeInfo;
    use crate::rng::{stream, StreamRole};
    use crate::sampler::Level;
    use crate::target::{GaussianMixtureTarget, GaussianTarget};

    fn ensemble(points: &[Vec<f64>], seed: u64) -> Ensemble {
        Ensemble::new(points[0].len(), points, seed, Level::Target).unwrap()
    }

    #[test]
    fn deterministic_langevin_drift() {
        let t = GaussianTarget::standard(2);
        for (beta, want) in [(1.0, 0.995), (0.05, 0.99975)] {
            let mut e = ensemble(&[vec![1.0, 0.0]], 0);
            ula_step(&mut e, &t, beta, 0.005, Noise::Zero);
            assert_close!(e.particle(0)[0], want, 1e-15);
            assert_eq!(e.particle(0)[1], 0.0);
        }
    }

    #[test]
    fn langevin_stationary_variance() {
        let t = GaussianTarget::standard(1);
        let n = 10_000;
        let mut init = stream(11, StreamRole::Initialization, 0);
        let points: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![init.sample::<f64, _>(StandardNormal)])
            .collect();
        let mut e = ensemble(&points, 11);
        for _ in 0..10_000 {
            ula_step(&mut e, &t, 1.0, 0.005, Noise::Gaussian);
        }
        let mean = e.positions().iter().sum::<f64>() / n as f64;
        let var = e
            .positions()
            .iter()
            .map(|x| (x - mean).powi(2))
            .sum::<f64>()
            / (n - 1) as f64;
        let exact = 1.0 / (1.0 - 0.005 / 2.0);
        assert!((var / exact - 1.0).abs() <= 0.03, "{var}");
    }

    struct HalfLine;

    impl TargetDensity for HalfLine {
        fn dim(&self) -> usize {
            1
        }
        fn log_density(&self, x: &[f64]) -> f64 {
            if x[0] > 0.0 {
                -x[0]
            } else {
                f64::NEG_INFINITY
            }
        }
        fn grad_log_density(&self, _x: &[f64]) -> Vec<f64> {
            vec![-1.0]
        }
    }

    #[test]
    fn langevin_never_leaves_the_support() {
        let mut e = ensemble(&vec![vec![1e-3]; 200], 5);
        for _ in 0..50 {
            ula_step(&mut e, &HalfLine, 1.0, 0.01, Noise::Gaussian);
            assert!(e.positions().iter().all(|x| *x > 0.0));
        }
        // A drift out of the support with zero noise leaves the particle in place.
        let mut e = ensemble(&[vec![1e-3]], 5);
        assert_eq!(ula_step(&mut e, &HalfLine, 1.0, 0.01, Noise::Zero), 1);
        assert_eq!(e.particle(0), &[1e-3]);
    }

    #[test]
    fn rate_example() {
        let t = GaussianTarget::standard(1);
        let rates = birth_death_rates(&[0.0, 10.0], 1, &t, 1.0);
        // ½(K(0) + K(10)) with K the unit Gaussian kernel
        let k0 = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        let r1 = (0.5 * (k0 + k0 * (-50f64).exp())).ln();
        assert_close!(rates[0], r1, 1e-12);
        assert_close!(rates[0], -1.6121, 1e-4);
        assert_close!(rates[1], r1 + 50.0, 1e-12);
        let mean = 0.5 * (rates[0] + rates[1]);
        assert_close!(mean, 23.388, 1e-3);
        assert_close!(
            birth_death_probability(rates[1], mean, 0.005),
            1.0 - (-0.125f64).exp(),
            1e-12
        );
        assert_close!(birth_death_probability(rates[1], mean, 0.005), 0.1175, 1e-4);
    }

    #[test]
    fn identical_particles_never_change() {
        let t = GaussianTarget::standard(2);
        let mut e = ensemble(&vec![vec![0.3, -0.2]; 50], 2);
        let stats = birth_death_step(&mut e, &t, 0.05, 0.5);
        assert_eq!(stats, BirthDeathStats::default());
        assert!(e.particles().all(|p| p == [0.3, -0.2]));
    }

    #[test]
    fn birth_death_keeps_positions_from_the_ensemble() {
        let t = GaussianTarget::standard(1);
        let points: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64 * 0.25]).collect();
        let mut e = ensemble(&points, 9);
        let before: Vec<f64> = e.positions().to_vec();
        let stats = birth_death_step(&mut e, &t, 0.3, 1.0);
        assert_eq!(e.len(), 40);
        assert!(stats.kills + stats.duplications > 0);
        assert!(e.positions().iter().all(|x| before.contains(x)));
    }

    #[test]
    fn kill_frequency_matches_probability() {
        // Only particle 1 (far in the tail) is ever killed, only particle 0 duplicated.
        let t = GaussianTarget::standard(1);
        let p = 1.0 - (-0.125f64).exp();
        let trials = 20_000;
        let mut far_survives = 0;
        for seed in 0..trials {
            let mut e = ensemble(&[vec![0.0], vec![10.0]], seed);
            birth_death_step(&mut e, &t, 1.0, 0.005);
            if e.particle(1) == [10.0] {
                far_survives += 1;
            }
        }
        // The far particle survives iff neither event fires.
        let expected = (1.0 - p) * (1.0 - p);
        let freq = far_survives as f64 / trials as f64;
        let se = (expected * (1.0 - expected) / trials as f64).sqrt();
        assert!((freq - expected).abs() <= 4.0 * se, "{freq} vs {expected}");
    }

    #[test]
    fn mixture_moves_reach_the_target_from_a_wider_proposal() {
        // Proposal N(0, 2) for target N(0, 1). Moves started from a point mass
        // must settle on unit variance.
        let t = GaussianTarget::standard(1);
        let atlas = ModeAtlas::from_modes(
            1,
            vec![ModeInfo::new(vec![0.0], Matrix::identity(1).scaled(2.0), 0.0).unwrap()],
        )
        .unwrap();
        let mut e = ensemble(&vec![vec![0.0]; 4000], 5);
        for _ in 0..40 {
            mh_mixture_step(&mut e, &t, &atlas).unwrap();
        }
        let n = e.len() as f64;
        let mean = e.positions().iter().sum::<f64>() / n;
        let var = e
            .positions()
            .iter()
            .map(|x| (x - mean).powi(2))
            .sum::<f64>()
            / n;
        assert!(mean.abs() < 0.06, "{mean}");
        assert!((var - 1.0).abs() < 0.08, "{var}");
    }

    #[test]
    fn exact_proposal_is_always_accepted() {
        // With the mixture equal to the target every ratio is one.
        let t = GaussianMixtureTarget::new(
            vec![vec![0.0, 8.0], vec![3.0, 5.0]],
            vec![Matrix::identity(2), Matrix::identity(2)],
            vec![0.5, 0.5],
        )
        .unwrap();
        let modes = vec![
            ModeInfo::new(vec![0.0, 8.0], Matrix::identity(2), 0.0).unwrap(),
            ModeInfo::new(vec![3.0, 5.0], Matrix::identity(2), 0.0).unwrap(),
        ];
        let atlas = ModeAtlas::from_modes(2, modes).unwrap();
        let mut e = ensemble(&vec![vec![0.0, 8.0]; 300], 1);
        let rate = mh_mixture_step(&mut e, &t, &atlas).unwrap();
        assert_eq!(rate, 1.0);
    }

    #[test]
    fn off_support_proposal_is_rejected() {
        assert_eq!(
            mh_log_acceptance(-1.0, f64::NEG_INFINITY, -2.0, -3.0),
            f64::NEG_INFINITY
        );
        assert_eq!(
            mh_log_acceptance(-1.0, f64::NAN, -2.0, -3.0),
            f64::NEG_INFINITY
        );
        let atlas = ModeAtlas::from_modes(
            1,
            vec![ModeInfo::new(vec![0.0], Matrix::identity(1), 0.0).unwrap()],
        )
        .unwrap();
        let mut e = ensemble(&vec![vec![0.5]; 500], 3);
        mh_mixture_step(&mut e, &HalfLine, &atlas).unwrap();
        assert!(e.positions().iter().all(|x| *x > 0.0));
    }

    #[test]
    fn detailed_balance_identity() {
        let mut rng = stream(21, StreamRole::Reference, 0);
        for _ in 0..100 {
            let [px, pz, rx, rz]: [f64; 4] = std::array::from_fn(|_| rng.random_range(-30.0..5.0));
            // π(x)·ρ̂(z)·A(x→z) against the reverse move, in logs.
            let forward = px + rz + mh_log_acceptance(px, pz, rx, rz);
            let backward = pz + rx + mh_log_acceptance(pz, px, rz, rx);
            assert!(
                ((forward - backward).exp() - 1.0).abs() <= 1e-12,
                "{px} {pz} {rx} {rz}"
            );
        }
    }

    #[test]
    fn acceptance_favours_target_mass_the_proposal_underweights() {
        // π(z) = π(x) but ρ̂ proposes z e times more often than x.
        assert_close!(mh_log_acceptance(-1.0, -1.0, -2.0, -1.0), -1.0, 1e-15);
        assert_eq!(mh_log_acceptance(-1.0, -1.0, -1.0, -2.0), 0.0);
    }

    #[test]
    fn empty_atlas_is_an_error() {
        let mut e = ensemble(&[vec![0.0]], 0);
        let t = GaussianTarget::standard(1);
        assert!(mh_mixture_step(&mut e, &t, &ModeAtlas::empty(1)).is_err());
    }
}
