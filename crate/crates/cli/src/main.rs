use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Mutex;

use bdec_core::experiment::{
    preset, presets, run_experiment_with, ExperimentConfig, ProgressEvent,
};
use bdec_core::sampler::Algorithm;
use bdec_core::Error;
use clap::{Args, Parser, Subcommand};

const SCHEMA: &str = include_str!("../../../schema/experiment.schema.json");

#[derive(Parser)]
#[command(
    name = "bdec",
    version,
    about = "Birth-death Langevin sampling with mode exploration"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a config file or a built-in preset.
    Run(RunArgs),
    /// List the built-in presets, or print one as a config file.
    Presets {
        /// Print the named preset's config as JSON.
        #[arg(long, value_name = "NAME")]
        show: Option<String>,
    },
    /// Check a config file without running it.
    Validate {
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
    },
    /// Print the JSON schema of config files.
    Schema,
}

#[derive(Args)]
struct RunArgs {
    #[arg(
        long,
        value_name = "PATH",
        conflicts_with = "preset",
        required_unless_present = "preset"
    )]
    config: Option<PathBuf>,
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Master seed; replicate r uses seed + r.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_algorithm)]
    algo: Option<Algorithm>,
    #[arg(long)]
    reps: Option<usize>,
    /// Worker threads.
    #[arg(long)]
    workers: Option<usize>,
    /// Write ensemble snapshots every K iterations.
    #[arg(long, value_name = "K")]
    snapshot_every: Option<usize>,
    /// Stream progress records as JSON lines on stdout.
    #[arg(long)]
    progress: bool,
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Failure classes mapped to exit codes.
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig { .. }
            | Error::UnknownPreset(_)
            | Error::UnknownTarget(_)
            | Error::Json(_)
            | Error::DimensionMismatch { .. } => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Presets { show } => list_presets(show),
        Command::Validate { config } => validate(config),
        Command::Schema => {
            print!("{SCHEMA}");
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn load(path: &PathBuf) -> Result<ExperimentConfig, Failure> {
    ExperimentConfig::load(path).map_err(|e| match e {
        Error::Io { .. } => Failure::Usage(e.to_string()),
        other => other.into(),
    })
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let mut config = match (&args.config, &args.preset) {
        (Some(path), _) => load(path)?,
        (None, Some(name)) => preset(name)?,
        (None, None) => unreachable!("clap requires one of --config and --preset"),
    };
    if let Some(seed) = args.seed {
        config.sampler.seed = seed;
    }
    if let Some(algo) = args.algo {
        config.sampler.algorithm = algo;
        if let Some(name) = &config.name {
            if let Some((stem, _)) = name.rsplit_once('-') {
                config.name = Some(format!("{stem}-{algo}"));
            }
        }
    }
    if let Some(reps) = args.reps {
        config.replicates = reps;
    }
    if let Some(w) = args.workers {
        config.workers = Some(w);
    }
    if let Some(k) = args.snapshot_every {
        config.snapshot_every = Some(k);
    }
    if let Some(out) = args.out {
        config.output_dir = Some(out);
    }
    if config.output_dir.is_none() {
        let name = config
            .name
            .clone()
            .unwrap_or_else(|| config.target.identifier().to_string());
        config.output_dir = Some(PathBuf::from("bdec-output").join(name));
    }
    config.validate()?;

    let stdout = Mutex::new(std::io::stdout());
    let report = |e: &ProgressEvent| {
        let line = serde_json::to_string(e).expect("progress events serialize");
        let mut out = stdout.lock().expect("stdout lock");
        let _ = writeln!(out, "{line}");
    };
    let progress: Option<&(dyn Fn(&ProgressEvent) + Sync)> =
        if args.progress { Some(&report) } else { None };
    let outcome = run_experiment_with(&config, progress)?;

    let dir = config
        .output_dir
        .as_ref()
        .expect("output directory is set above");
    eprintln!(
        "{} replicate(s) of {} on {} written to {}",
        outcome.replicates.len(),
        config.sampler.algorithm,
        config.target.identifier(),
        dir.display()
    );
    Ok(())
}

fn list_presets(show: Option<String>) -> Result<(), Failure> {
    match show {
        Some(name) => println!("{}", preset(&name)?.to_json()),
        None => {
            for p in presets() {
                println!("{:<16} {}", p.name, p.description);
            }
        }
    }
    Ok(())
}

fn validate(path: PathBuf) -> Result<(), Failure> {
    let config = load(&path)?;
    config.validate()?;
    println!("{}: ok", path.display());
    Ok(())
}
