//! Experiment configuration files and dotted-key overrides.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use mvlab::galerkin::FieldInit;
use mvlab::ldp::Event;
use mvlab::models::{ModelSpec, SamplerConfig};
use mvlab::solvers::{InitialCondition, LawMode, RunMetadata, Scheme};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Simulate,
    ChaosCompare,
    Assumptions,
    Ldp,
    Spde,
    Holder,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::ChaosCompare => "chaos-compare",
            ExperimentKind::Assumptions => "assumptions",
            ExperimentKind::Ldp => "ldp",
            ExperimentKind::Spde => "spde",
            ExperimentKind::Holder => "holder",
        }
    }
}

/// Parsed experiment file. Sections not used by `experiment` may be present
/// and are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Also write gnuplot scripts next to the CSV files.
    #[serde(default)]
    pub plot: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialCondition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chaos: Option<ChaosSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assumptions: Option<AssumptionsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ldp: Option<LdpSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spde: Option<SpdeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holder: Option<HolderSection>,
    /// Filled in when the sidecar is written; ignored on input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub version: String,
    pub overrides: Vec<String>,
    /// Particle runs performed by the experiment.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub run: Vec<RunMetadata>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub horizon: f64,
    pub intervals: usize,
    #[serde(default = "one")]
    pub inner_steps: usize,
    /// Interacting particle count `N`; also the law size unless `law_size`
    /// is given.
    pub particles: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub law_size: Option<usize>,
    #[serde(default)]
    pub law_mode: LawMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsample: Option<usize>,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

fn two() -> f64 {
    2.0
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Binary,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    #[serde(default = "frozen")]
    pub scheme: Scheme,
    /// Format of the full path dump.
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default = "yes")]
    pub write_paths: bool,
}

fn frozen() -> Scheme {
    Scheme::FrozenMeasure
}

impl Default for SimulateSection {
    fn default() -> Self {
        SimulateSection {
            scheme: Scheme::FrozenMeasure,
            format: OutputFormat::Csv,
            write_paths: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChaosSection {
    /// Comparison times; each must be a point of the outer grid.
    pub times: Vec<f64>,
    /// Seed of the interacting run; defaults to `seed + 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interacting_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssumptionsSection {
    /// Condition ids such as `A2` or `A2'''`.
    pub conditions: Vec<String>,
    #[serde(default)]
    pub sampler: SamplerConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LdpSection {
    pub x0: Vec<f64>,
    pub horizon: f64,
    pub intervals: usize,
    pub epsilons: Vec<f64>,
    pub trials: Vec<usize>,
    pub event: Event,
    #[serde(default = "yes")]
    pub bridge_correction: bool,
    /// Known value of `lim epsilon ln p`, drawn in the plot.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpdeSection {
    pub modes: usize,
    pub r: f64,
    pub fields: usize,
    pub horizon: f64,
    pub intervals: usize,
    #[serde(default)]
    pub noise_weights: Vec<f64>,
    #[serde(default = "one")]
    pub record_every: usize,
    pub init: FieldInit,
    /// Exponent of `sup_t ||X||_H^p` in the energy table.
    #[serde(default = "two")]
    pub energy_p: f64,
    /// Times of physical-space snapshots; the nearest recorded frame is used.
    #[serde(default)]
    pub snapshots: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolderSection {
    #[serde(default = "two")]
    pub q: f64,
    /// Lags in units of the outer grid step.
    pub lag_steps: Vec<usize>,
    #[serde(default = "frozen")]
    pub scheme: Scheme,
}

impl ExperimentConfig {
    /// Parses `text`, applies `overrides` (`dotted.key=value`) and the
    /// command-line seed, thread count and output directory.
    pub fn resolve(
        text: &str,
        overrides: &[String],
        seed: Option<u64>,
        threads: Option<usize>,
        out: Option<PathBuf>,
    ) -> Result<Self, CliError> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        for assignment in overrides {
            apply_override(&mut table, assignment)?;
        }
        if let Some(seed) = seed {
            let seed = i64::try_from(seed)
                .map_err(|_| CliError::config(format!("seed {seed} exceeds the largest TOML integer")))?;
            table.insert("seed".into(), toml::Value::Integer(seed));
        }
        let mut cfg: ExperimentConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| CliError::config(e.to_string()))?;
        if threads.is_some() {
            cfg.threads = threads;
        }
        if out.is_some() {
            cfg.out = out;
        }
        if cfg.threads == Some(0) {
            return Err(CliError::config("threads must be at least 1"));
        }
        if cfg.seed > i64::MAX as u64 {
            return Err(CliError::config("seed exceeds the largest TOML integer"));
        }
        cfg.provenance = None;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::config(e.to_string()))
    }
}

/// Sets `a.b.c = value` in `table`. The value is read as a TOML value and
/// falls back to a bare string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::config(format!("override `{assignment}` is not key=value")))?;
    let key = key.trim();
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::config(format!("override key `{key}` is malformed")));
    }
    let value = match toml::from_str::<toml::Table>(&format!("v = {}", raw.trim())) {
        Ok(mut t) => t.remove("v").expect("parsed table has key v"),
        Err(_) => toml::Value::String(raw.trim().to_string()),
    };
    let (last, path) = parts.split_last().expect("split yields at least one part");
    let mut node = table;
    for part in path {
        node = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| CliError::config(format!("override `{key}`: `{part}` is not a section")))?;
    }
    node.insert(last.to_string(), value);
    Ok(())
}
