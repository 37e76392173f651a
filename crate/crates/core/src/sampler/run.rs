use rand::seq::index::sample as sample_indices;

use super::kernels::{birth_death_step_scaled, mh_mixture_step, ula_step, Noise};
use super::{Algorithm, Ensemble, SamplerConfig};
use crate::error::{Error, Result};
use crate::modes::{exploration_step, ExplorationReport, ModeAtlas};
use crate::target::TargetDensity;

/// State handed to an [`Observer`] after each update of the target-level ensemble.
pub struct UpdateView<'a> {
    /// Iteration `j`, 1-based; 0 for the initial state.
    pub iteration: usize,
    /// Update index `m = (j − 1)·T + t`; 0 for the initial state.
    pub update: usize,
    pub ensemble: &'a Ensemble,
    pub atlas: &'a ModeAtlas,
    /// Acceptance fraction when this update was a mixture MH move.
    pub acceptance_rate: Option<f64>,
    /// Exploration outcome of the current iteration.
    pub exploration: Option<&'a ExplorationReport>,
}

/// Receives the initial state and every subsequent update.
pub trait Observer {
    fn observe(&mut self, view: &UpdateView<'_>) -> Result<()>;
}

impl<F: FnMut(&UpdateView<'_>) -> Result<()>> Observer for F {
    fn observe(&mut self, view: &UpdateView<'_>) -> Result<()> {
        self(view)
    }
}

/// Discards every update.
pub struct NoObserver;

impl Observer for NoObserver {
    fn observe(&mut self, _view: &UpdateView<'_>) -> Result<()> {
        Ok(())
    }
}

/// Test knobs that alter the dynamics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplerHooks {
    /// Multiplies every birth-death event probability.
    pub birth_death_scale: f64,
    pub noise: Noise,
}

impl Default for SamplerHooks {
    fn default() -> Self {
        Self {
            birth_death_scale: 1.0,
            noise: Noise::Gaussian,
        }
    }
}

/// Final state of a run.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub ensemble: Ensemble,
    pub tempered: Option<Ensemble>,
    pub atlas: ModeAtlas,
    /// Iterations in which at least one mode was appended.
    pub insertion_iterations: usize,
    /// Optimizer runs that failed across all explorations.
    pub optimizer_failures: usize,
}

/// One configured run over a target.
pub struct Sampler<'t> {
    config: SamplerConfig,
    target: &'t dyn TargetDensity,
    hooks: SamplerHooks,
}

impl<'t> Sampler<'t> {
    pub fn new(config: SamplerConfig, target: &'t dyn TargetDensity) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            target,
            hooks: SamplerHooks::default(),
        })
    }

    pub fn with_hooks(mut self, hooks: SamplerHooks) -> Self {
        self.hooks = hooks;
        self
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    /// Runs `J` iterations of `T` updates each.
    ///
    /// `tempered` is required by the exploring algorithms and ignored by the
    /// others.
    pub fn run(
        &self,
        mut x: Ensemble,
        mut tempered: Option<Ensemble>,
        mut atlas: ModeAtlas,
        observer: &mut dyn Observer,
    ) -> Result<RunOutcome> {
        let c = &self.config;
        let d = self.target.dim();
        if x.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: x.dim(),
            });
        }
        if x.len() != c.n_particles {
            return Err(Error::config(
                "n_particles",
                format!("does not match the ensemble size {}", x.len()),
            ));
        }
        if atlas.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: atlas.dim(),
            });
        }
        let explores = c.algorithm.explores();
        if explores {
            match &tempered {
                Some(y) if y.len() == c.n_tempered() && y.dim() == d => {}
                Some(y) => {
                    return Err(Error::config(
                        "n_tempered",
                        format!("does not match the tempered ensemble size {}", y.len()),
                    ))
                }
                None => {
                    return Err(Error::config(
                        "n_tempered",
                        "an exploring run needs a tempered ensemble",
                    ))
                }
            }
        } else {
            tempered = None;
        }
        let threshold = c.threshold(d);
        let t_moves = c.moves_per_iteration;
        let bd_scale = self.hooks.birth_death_scale;

        observer.observe(&UpdateView {
            iteration: 0,
            update: 0,
            ensemble: &x,
            atlas: &atlas,
            acceptance_rate: None,
            exploration: None,
        })?;

        let mut insertion_iterations = 0;
        let mut optimizer_failures = 0;
        for j in 1..=c.iterations {
            let mut report = None;
            if let Some(y) = tempered.as_mut() {
                for _ in 0..t_moves {
                    ula_step(y, self.target, c.beta_hot, c.dt, self.hooks.noise);
                }
                let n_hot = y.len();
                let batch: Vec<Vec<f64>> = sample_indices(y.shared_stream(), n_hot, c.batch_size)
                    .into_iter()
                    .map(|i| y.particle(i).to_vec())
                    .collect();
                let r = exploration_step(&batch, &mut atlas, self.target, threshold);
                optimizer_failures += r.failures;
                report = Some(r);
            }
            let inserting = report.as_ref().is_some_and(|r| r.new_found);
            if inserting {
                insertion_iterations += 1;
            }

            for t in 1..=t_moves {
                let mut acceptance_rate = None;
                if inserting {
                    if c.langevin_in_insertion {
                        ula_step(&mut x, self.target, 1.0, c.dt, self.hooks.noise);
                    }
                    acceptance_rate = Some(mh_mixture_step(&mut x, self.target, &atlas)?);
                } else {
                    ula_step(&mut x, self.target, 1.0, c.dt, self.hooks.noise);
                }
                if c.algorithm.uses_birth_death() {
                    birth_death_step_scaled(&mut x, self.target, c.h, c.dt, bd_scale);
                }
                observer.observe(&UpdateView {
                    iteration: j,
                    update: (j - 1) * t_moves + t,
                    ensemble: &x,
                    atlas: &atlas,
                    acceptance_rate,
                    exploration: report.as_ref(),
                })?;
            }
        }

        Ok(RunOutcome {
            ensemble: x,
            tempered,
            atlas,
            insertion_iterations,
            optimizer_failures,
        })
    }
}

/// Runs the full scheme with its exploration component.
pub fn run_bdec(
    config: SamplerConfig,
    target: &dyn TargetDensity,
    x: Ensemble,
    tempered: Ensemble,
    atlas: ModeAtlas,
    observer: &mut dyn Observer,
) -> Result<RunOutcome> {
    if config.algorithm != Algorithm::Bdec {
        return Err(Error::config(
            "algorithm",
            "run_bdec needs algorithm = bdec",
        ));
    }
    Sampler::new(config, target)?.run(x, Some(tempered), atlas, observer)
}

/// Runs `bdls`, `lec` or `ula`. `lec` needs the tempered ensemble.
pub fn run_baseline(
    config: SamplerConfig,
    target: &dyn TargetDensity,
    x: Ensemble,
    tempered: Option<Ensemble>,
    atlas: Option<ModeAtlas>,
    observer: &mut dyn Observer,
) -> Result<RunOutcome> {
    if config.algorithm == Algorithm::Bdec {
        return Err(Error::config(
            "algorithm",
            "run_baseline needs bdls, lec or ula",
        ));
    }
    let atlas = atlas.unwrap_or_else(|| ModeAtlas::empty(target.dim()));
    Sampler::new(config, target)?.run(x, tempered, atlas, observer)
}
