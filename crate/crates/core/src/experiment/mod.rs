//! Experiment configs, built-in presets and replicated runs with their output files.
//!
//! An output directory holds
//!
//! * `config.json`: the resolved config,
//! * `metrics_rep<r>.csv`: `replicate,iteration,update,metric,value` rows,
//! * `summary.json`: across-replicate mean and std per update and metric,
//! * `rep<r>/atlas_final.json`: the final mode atlas,
//! * `rep<r>/ensemble_iter<k>.csv`: snapshots, when `snapshot_every` is set.

mod config;
mod presets;
mod runner;

pub use config::{ExperimentConfig, DEFAULT_REFERENCE_SAMPLES, DEFAULT_REPLICATES};
pub use presets::{preset, presets, Preset};
pub use runner::{
    run_experiment, run_experiment_with, ExperimentOutcome, ProgressEvent, ReplicateOutcome,
    Summary, SummaryRow,
};
