use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::ExperimentConfig;
use crate::diagnostics::{
    estimate_expectation, estimate_z, marginal_kl, Chi2Grid, Grid1d, Metric, MetricRow,
    MetricsWriter, RunMetrics,
};
use crate::error::{Error, Result};
use crate::modes::ModeAtlas;
use crate::rng::{stream, StreamRole};
use crate::sampler::{Ensemble, Level, RunOutcome, Sampler, UpdateView};
use crate::target::{TargetDensity, TargetSpec};

/// Progress record emitted after every update of the target-level ensemble.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProgressEvent {
    pub replicate: usize,
    pub iteration: usize,
    pub update: usize,
    pub modes_found: usize,
    pub acceptance_rate: Option<f64>,
}

/// Everything one replicate produced.
#[derive(Clone, Debug)]
pub struct ReplicateOutcome {
    pub replicate: usize,
    pub seed: u64,
    pub metrics: RunMetrics,
    pub run: RunOutcome,
}

/// Across-replicate mean and sample standard deviation of one metric at one update.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub iteration: usize,
    pub update: usize,
    pub metric: String,
    pub count: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub name: Option<String>,
    pub algorithm: String,
    pub target: String,
    pub replicates: usize,
    pub seeds: Vec<u64>,
    pub series: Vec<SummaryRow>,
}

impl Summary {
    /// Mean of `metric` at `update`.
    pub fn mean(&self, metric: &str, update: usize) -> Option<f64> {
        self.series
            .iter()
            .find(|r| r.metric == metric && r.update == update)
            .map(|r| r.mean)
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub replicates: Vec<ReplicateOutcome>,
    pub summary: Summary,
}

/// Runs every replicate of `config` and writes its output files when an
/// output directory is configured.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    run_experiment_with(config, None)
}

/// [`run_experiment`] with a progress callback.
pub fn run_experiment_with(
    config: &ExperimentConfig,
    progress: Option<&(dyn Fn(&ProgressEvent) + Sync)>,
) -> Result<ExperimentOutcome> {
    config.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = config.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::ThreadPool(e.to_string()))?;
    pool.install(|| run_in_pool(config, progress))
}

struct Context<'a> {
    config: &'a ExperimentConfig,
    target: Arc<dyn TargetDensity>,
    chi2: Option<Chi2Grid>,
    kl_grids: BTreeMap<usize, Grid1d>,
    out_dir: Option<PathBuf>,
    progress: Option<&'a (dyn Fn(&ProgressEvent) + Sync)>,
}

fn run_in_pool(
    config: &ExperimentConfig,
    progress: Option<&(dyn Fn(&ProgressEvent) + Sync)>,
) -> Result<ExperimentOutcome> {
    let target = config.target.build()?;
    let chi2 = if config.metrics.contains(&Metric::Chi2) {
        Some(match (&config.chi2_grid, &config.target) {
            (Some(axes), _) => Chi2Grid::new(target.as_ref(), axes.clone())?,
            (None, TargetSpec::Example1 {}) => Chi2Grid::example1(target.as_ref())?,
            (None, _) => return Err(Error::config("chi2_grid", "is required for this target")),
        })
    } else {
        None
    };
    let kl_grids = config
        .metrics
        .iter()
        .filter_map(|m| match m {
            Metric::MarginalKl { coordinate } => {
                Some((*coordinate, config.kl_grid(target.as_ref(), *coordinate)))
            }
            _ => None,
        })
        .collect();
    let out_dir = config.output_dir.clone();
    if let Some(dir) = &out_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
        write_file(&dir.join("config.json"), config.to_json().as_bytes())?;
    }
    let ctx = Context {
        config,
        target,
        chi2,
        kl_grids,
        out_dir,
        progress,
    };

    let replicates: Vec<ReplicateOutcome> = if config.parallel_replicates {
        (0..config.replicates)
            .into_par_iter()
            .map(|r| run_replicate(&ctx, r))
            .collect::<Result<_>>()?
    } else {
        (0..config.replicates)
            .map(|r| run_replicate(&ctx, r))
            .collect::<Result<_>>()?
    };

    let summary = summarize(config, &replicates);
    if let Some(dir) = &ctx.out_dir {
        let json = serde_json::to_string_pretty(&summary)?;
        write_file(&dir.join("summary.json"), json.as_bytes())?;
    }
    Ok(ExperimentOutcome {
        replicates,
        summary,
    })
}

fn run_replicate(ctx: &Context<'_>, r: usize) -> Result<ReplicateOutcome> {
    let config = ctx.config;
    let target = ctx.target.as_ref();
    let d = target.dim();
    let seed = config.sampler.seed.wrapping_add(r as u64);
    let mut sampler_config = config.sampler.clone();
    sampler_config.seed = seed;

    let initial = config.initial();
    let x_points = initial.draw(
        target,
        sampler_config.n_particles,
        &mut stream(seed, StreamRole::Initialization, 0),
    )?;
    let x = Ensemble::new(d, &x_points, seed, Level::Target)?;
    let y = if sampler_config.algorithm.explores() {
        let points = initial.draw(
            target,
            sampler_config.n_tempered(),
            &mut stream(seed, StreamRole::Initialization, 1),
        )?;
        Some(Ensemble::new(d, &points, seed, Level::Tempered)?)
    } else {
        None
    };
    let atlas = match &config.initial_atlas {
        Some(doc) => ModeAtlas::from_document(doc, Some(target))?,
        None => ModeAtlas::empty(d),
    };
    let reference: Vec<f64> = if config.metrics.contains(&Metric::Z) {
        let mut rng = stream(seed, StreamRole::Reference, 0);
        let mut buf = Vec::with_capacity(config.reference_samples * d);
        for _ in 0..config.reference_samples {
            buf.extend(
                target
                    .sample_exact(&mut rng)
                    .ok_or_else(|| Error::config("metrics", "`Z` needs exact draws"))?,
            );
        }
        buf
    } else {
        Vec::new()
    };

    let rep_dir = ctx.out_dir.as_ref().map(|d| d.join(format!("rep{r}")));
    if let Some(dir) = &rep_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    }
    let mut writer = match &ctx.out_dir {
        Some(dir) => {
            let path = dir.join(format!("metrics_rep{r}.csv"));
            let file = File::create(&path)
                .map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
            Some(MetricsWriter::new(BufWriter::new(file))?)
        }
        None => None,
    };
    let mut metrics = RunMetrics::new();
    let t_moves = sampler_config.moves_per_iteration;

    let mut observer = |view: &UpdateView<'_>| -> Result<()> {
        for metric in &config.metrics {
            let value = match evaluate(ctx, metric, view, &reference)? {
                Some(v) => v,
                None => continue,
            };
            let row = MetricRow {
                replicate: r,
                iteration: view.iteration,
                update: view.update,
                metric: metric.to_string(),
                value,
            };
            if let Some(w) = writer.as_mut() {
                w.write(&row)?;
            }
            metrics.push(row);
        }
        if let Some(report) = ctx.progress {
            report(&ProgressEvent {
                replicate: r,
                iteration: view.iteration,
                update: view.update,
                modes_found: view.atlas.len(),
                acceptance_rate: view.acceptance_rate,
            });
        }
        if let (Some(dir), Some(every)) = (&rep_dir, config.snapshot_every) {
            if view.update % t_moves == 0 && view.iteration % every == 0 {
                let path = dir.join(format!("ensemble_iter{}.csv", view.iteration));
                let file = File::create(&path)
                    .map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
                let mut out = BufWriter::new(file);
                view.ensemble
                    .write_csv(&mut out)
                    .and_then(|_| out.flush())
                    .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
            }
        }
        Ok(())
    };

    let run = Sampler::new(sampler_config, target)?.run(x, y, atlas, &mut observer)?;
    if let Some(w) = writer {
        w.finish()?;
    }
    if let Some(dir) = &rep_dir {
        run.atlas.save(&dir.join("atlas_final.json"))?;
    }
    Ok(ReplicateOutcome {
        replicate: r,
        seed,
        metrics,
        run,
    })
}

fn evaluate(
    ctx: &Context<'_>,
    metric: &Metric,
    view: &UpdateView<'_>,
    reference: &[f64],
) -> Result<Option<f64>> {
    let ens = view.ensemble;
    let config = ctx.config;
    Ok(match metric {
        Metric::Expectation(o) => Some(estimate_expectation(ens, |x| o.eval(x))),
        Metric::Z => Some(estimate_z(
            ens.positions(),
            reference,
            ens.dim(),
            config.z_radius(),
        )),
        Metric::ModeCount => Some(view.atlas.len() as f64),
        Metric::AcceptanceRate => view.acceptance_rate,
        Metric::MarginalKl { coordinate } => {
            let target = ctx.target.as_ref();
            let c = *coordinate;
            Some(marginal_kl(
                ens.positions(),
                ens.dim(),
                c,
                |u| target.marginal_log_density(c, u).unwrap_or(f64::NAN),
                config.diagnostic_bandwidth(),
                &ctx.kl_grids[&c],
            )?)
        }
        Metric::Chi2 => {
            let grid = ctx
                .chi2
                .as_ref()
                .expect("chi2 grid is built when requested");
            Some(
                grid.divergence(ens.positions(), config.diagnostic_bandwidth())?
                    .divergence,
            )
        }
    })
}

fn summarize(config: &ExperimentConfig, replicates: &[ReplicateOutcome]) -> Summary {
    let order: BTreeMap<String, usize> = config
        .metrics
        .iter()
        .enumerate()
        .map(|(i, m)| (m.to_string(), i))
        .collect();
    let mut groups: BTreeMap<(usize, usize), (usize, String, Vec<f64>)> = BTreeMap::new();
    for rep in replicates {
        for row in rep.metrics.rows() {
            groups
                .entry((row.update, order[&row.metric]))
                .or_insert_with(|| (row.iteration, row.metric.clone(), Vec::new()))
                .2
                .push(row.value);
        }
    }
    let series = groups
        .into_iter()
        .map(|((update, _), (iteration, metric, values))| {
            let n = values.len();
            let mean = values.iter().sum::<f64>() / n as f64;
            let std = if n > 1 {
                (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            SummaryRow {
                iteration,
                update,
                metric,
                count: n,
                mean,
                std,
            }
        })
        .collect();
    Summary {
        name: config.name.clone(),
        algorithm: config.sampler.algorithm.to_string(),
        target: config.target.identifier().to_string(),
        replicates: replicates.len(),
        seeds: replicates.iter().map(|r| r.seed).collect(),
        series,
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}
