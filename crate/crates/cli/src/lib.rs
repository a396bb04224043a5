//! Configuration-driven experiment runner.
//!
//! A run reads a TOML experiment file, applies command-line overrides,
//! writes CSV tables into the output directory and a `run.toml` sidecar
//! holding the resolved configuration. Feeding the sidecar back through
//! `--config` repeats the run.

pub mod config;
pub mod error;
pub mod experiments;

use std::fs;
use std::path::PathBuf;

use clap::Parser;

pub use config::{ExperimentConfig, ExperimentKind, Provenance};
pub use error::{Category, CliError};

use experiments::Outputs;

pub const SIDECAR: &str = "run.toml";

#[derive(Debug, Clone, Parser)]
#[command(name = "mvlab", version, about = "McKean-Vlasov numerical experiments")]
pub struct Args {
    /// Experiment file.
    #[arg(long)]
    pub config: PathBuf,
    /// Override `dotted.key=value` after parsing; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads. Results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
}

pub fn run(args: &Args) -> Result<RunSummary, CliError> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| CliError::io(format!("{}: {e}", args.config.display())))?;
    let cfg = ExperimentConfig::resolve(&text, &args.set, args.seed, args.threads, args.out.clone())?;
    run_config(cfg, &args.set)
}

/// Runs an already resolved configuration. `overrides` is only recorded.
pub fn run_config(mut cfg: ExperimentConfig, overrides: &[String]) -> Result<RunSummary, CliError> {
    let dir = cfg
        .out
        .clone()
        .ok_or_else(|| CliError::config("no output directory: set `out` or pass --out"))?;
    let runs = experiments::planned_runs(&cfg)?;
    fs::create_dir_all(&dir).map_err(|e| CliError::io(format!("{}: {e}", dir.display())))?;
    let mut out = Outputs::new(&dir);
    cfg.provenance = Some(Provenance {
        version: env!("CARGO_PKG_VERSION").to_string(),
        overrides: overrides.to_vec(),
        run: runs,
    });
    out.text(SIDECAR, &cfg.to_toml()?)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::config(format!("thread pool: {e}")))?;
    pool.install(|| experiments::execute(&cfg, &mut out))?;
    Ok(RunSummary {
        out_dir: dir,
        files: out.into_files(),
    })
}
