use super::{ExperimentConfig, DEFAULT_REFERENCE_SAMPLES, DEFAULT_REPLICATES};
use crate::error::{Error, Result};
use crate::sampler::{Algorithm, SamplerConfig};
use crate::target::TargetSpec;

/// A named, ready-to-run experiment.
#[derive(Clone, Debug)]
pub struct Preset {
    pub name: String,
    pub description: &'static str,
    pub config: ExperimentConfig,
}

/// All built-in presets.
pub fn presets() -> Vec<Preset> {
    let mut out = Vec::new();
    for algo in [
        Algorithm::Bdec,
        Algorithm::Bdls,
        Algorithm::Lec,
        Algorithm::Ula,
    ] {
        out.push(Preset {
            name: format!("example1-{algo}"),
            description: "2D four-component Gaussian mixture, 300 updates",
            config: example1(algo),
        });
    }
    for algo in [Algorithm::Bdec, Algorithm::Lec] {
        out.push(Preset {
            name: format!("sur2d-{algo}"),
            description: "2D seemingly-unrelated regression posterior, 150 updates",
            config: sur2d(algo),
        });
    }
    for algo in [Algorithm::Bdec, Algorithm::Bdls, Algorithm::Lec] {
        out.push(Preset {
            name: format!("skew20d-{algo}"),
            description: "20D skew-normal mixture, 90 updates",
            config: skew20d(algo),
        });
    }
    out
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    presets()
        .into_iter()
        .find(|p| p.name == name)
        .map(|p| p.config)
        .ok_or_else(|| Error::UnknownPreset(name.to_string()))
}

fn metrics(names: &[&str]) -> Vec<crate::diagnostics::Metric> {
    names
        .iter()
        .map(|n| n.parse().expect("preset metric names are valid"))
        .collect()
}

fn base(
    name: String,
    target: TargetSpec,
    sampler: SamplerConfig,
    metric_names: &[&str],
) -> ExperimentConfig {
    ExperimentConfig {
        name: Some(name),
        target,
        sampler,
        metrics: metrics(metric_names),
        replicates: DEFAULT_REPLICATES,
        reference_samples: DEFAULT_REFERENCE_SAMPLES,
        z_radius: None,
        diagnostic_bandwidth: None,
        kl_grid: None,
        chi2_grid: None,
        initial: None,
        initial_atlas: None,
        output_dir: None,
        workers: None,
        parallel_replicates: false,
        snapshot_every: None,
    }
}

fn example1(algorithm: Algorithm) -> ExperimentConfig {
    base(
        format!("example1-{algorithm}"),
        TargetSpec::Example1 {},
        SamplerConfig {
            algorithm,
            dt: 0.005,
            h: 0.05,
            beta_hot: 0.05,
            n_particles: 2000,
            n_tempered: None,
            iterations: 50,
            moves_per_iteration: 6,
            batch_size: 12,
            threshold: None,
            langevin_in_insertion: false,
            seed: 1,
        },
        &["y", "quad", "abs_x", "Z", "mode_count", "acceptance_rate"],
    )
}

fn sur2d(algorithm: Algorithm) -> ExperimentConfig {
    base(
        format!("sur2d-{algorithm}"),
        TargetSpec::Sur { n_sur: 1.0 },
        SamplerConfig {
            algorithm,
            dt: 0.005,
            h: 0.05,
            beta_hot: 0.05,
            n_particles: 1000,
            n_tempered: None,
            iterations: 30,
            moves_per_iteration: 5,
            batch_size: 12,
            threshold: None,
            langevin_in_insertion: false,
            seed: 1,
        },
        &["x", "y", "mode_count", "acceptance_rate"],
    )
}

fn skew20d(algorithm: Algorithm) -> ExperimentConfig {
    base(
        format!("skew20d-{algorithm}"),
        TargetSpec::Skew20 {},
        SamplerConfig {
            algorithm,
            dt: 0.001,
            h: 0.05,
            beta_hot: 0.00005,
            n_particles: 1000,
            n_tempered: None,
            iterations: 30,
            moves_per_iteration: 3,
            batch_size: 12,
            threshold: None,
            langevin_in_insertion: false,
            seed: 1,
        },
        &[
            "marginal_kl coordinate=0",
            "coord0",
            "mode_count",
            "acceptance_rate",
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_list_covers_the_experiments() {
        let names: Vec<String> = presets().into_iter().map(|p| p.name).collect();
        assert!(names.len() >= 8);
        for n in [
            "example1-bdec",
            "example1-bdls",
            "example1-lec",
            "sur2d-bdec",
            "sur2d-lec",
            "skew20d-bdec",
            "skew20d-bdls",
            "skew20d-lec",
        ] {
            assert!(names.iter().any(|m| m == n), "{n}");
        }
    }

    #[test]
    fn example1_bdec_settings() {
        let c = preset("example1-bdec").unwrap();
        let s = &c.sampler;
        assert_eq!(
            (
                s.n_particles,
                s.dt,
                s.h,
                s.iterations,
                s.moves_per_iteration,
                s.beta_hot,
                s.batch_size
            ),
            (2000, 0.005, 0.05, 50, 6, 0.05, 12)
        );
        assert_eq!(c.replicates, 10);
    }

    #[test]
    fn other_experiment_settings() {
        let s = preset("sur2d-bdec").unwrap().sampler;
        assert_eq!(
            (s.iterations, s.moves_per_iteration, s.beta_hot),
            (30, 5, 0.05)
        );
        let s = preset("skew20d-bdls").unwrap().sampler;
        assert_eq!(
            (
                s.n_particles,
                s.dt,
                s.iterations,
                s.moves_per_iteration,
                s.beta_hot
            ),
            (1000, 0.001, 30, 3, 0.00005)
        );
        assert!(matches!(preset("nope"), Err(Error::UnknownPreset(_))));
    }
}
