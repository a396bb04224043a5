use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::TimeGrid;
use crate::models::CoefficientModel;
use crate::rng::{open_unit, standard_normals, StreamFamily};

/// Source of the measure argument in the frozen-measure scheme.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawMode {
    /// Snapshot of the evolving population itself.
    #[default]
    SelfConsistent,
    /// Snapshot of a second, independently driven population.
    IndependentCopy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub grid: TimeGrid,
    /// Euler substeps per outer interval.
    #[serde(default = "one")]
    pub inner_steps: usize,
    /// Law-ensemble size `M` of the frozen-measure scheme.
    pub law_size: usize,
    /// Particle count `N` of the interacting scheme.
    pub particles: usize,
    pub seed: u64,
    /// Requested parallelism; results never depend on it.
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub law_mode: LawMode,
    /// Atoms handed to pairwise-kernel models per evaluation, drawn uniformly
    /// without replacement. `None` uses the whole ensemble.
    #[serde(default)]
    pub subsample: Option<usize>,
}

fn one() -> usize {
    1
}

impl SolverConfig {
    pub fn new(grid: TimeGrid, size: usize, seed: u64) -> Self {
        SolverConfig {
            grid,
            inner_steps: 1,
            law_size: size,
            particles: size,
            seed,
            threads: None,
            law_mode: LawMode::SelfConsistent,
            subsample: None,
        }
    }

    pub fn with_inner_steps(mut self, inner: usize) -> Self {
        self.inner_steps = inner;
        self
    }

    pub fn with_law_mode(mut self, mode: LawMode) -> Self {
        self.law_mode = mode;
        self
    }

    pub fn with_subsample(mut self, size: Option<usize>) -> Self {
        self.subsample = size;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.inner_steps == 0 {
            return Err(Error::param("inner_steps", "must be at least 1"));
        }
        if self.law_size < 2 {
            return Err(Error::param("law_size", "must be at least 2"));
        }
        if self.particles < 2 {
            return Err(Error::param("particles", "must be at least 2"));
        }
        if self.subsample == Some(0) {
            return Err(Error::param("subsample", "must be positive"));
        }
        self.grid
            .intervals()
            .checked_mul(self.inner_steps)
            .ok_or(Error::Overflow("total step count"))?;
        Ok(())
    }

    /// Substep length.
    pub fn substep(&self) -> f64 {
        self.grid.step() / self.inner_steps as f64
    }
}

/// Draws i.i.d. initial states. Draw `index` must depend only on the family
/// and the index so that results do not depend on scheduling.
///
/// Moment results for the frozen-measure scheme assume the sampler has a
/// finite moment of order larger than the model's `kappa`.
pub trait InitialSampler: Send + Sync {
    fn check_dim(&self, dim: usize) -> Result<()>;
    fn sample(&self, family: &StreamFamily, index: u64, out: &mut [f64]);
}

/// Built-in initial laws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    /// Point mass.
    Constant { value: Vec<f64> },
    /// Independent normal components.
    Gaussian { mean: Vec<f64>, std: f64 },
    /// Independent uniform components on `[low, high)`.
    Uniform { low: Vec<f64>, high: Vec<f64> },
}

impl InitialCondition {
    fn len(&self) -> usize {
        match self {
            InitialCondition::Constant { value } => value.len(),
            InitialCondition::Gaussian { mean, .. } => mean.len(),
            InitialCondition::Uniform { low, .. } => low.len(),
        }
    }
}

impl InitialSampler for InitialCondition {
    fn check_dim(&self, dim: usize) -> Result<()> {
        if self.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: self.len(),
            });
        }
        match self {
            InitialCondition::Gaussian { std, .. } if !(*std >= 0.0 && std.is_finite()) => {
                Err(Error::param("initial.std", "must be finite and nonnegative"))
            }
            InitialCondition::Uniform { low, high } if low.len() != high.len() => {
                Err(Error::DimensionMismatch {
                    expected: low.len(),
                    found: high.len(),
                })
            }
            InitialCondition::Uniform { low, high } if low.iter().zip(high).any(|(l, h)| !(l <= h)) => {
                Err(Error::param("initial.low", "must not exceed initial.high"))
            }
            _ => Ok(()),
        }
    }

    fn sample(&self, family: &StreamFamily, index: u64, out: &mut [f64]) {
        match self {
            InitialCondition::Constant { value } => out.copy_from_slice(value),
            InitialCondition::Gaussian { mean, std } => {
                standard_normals(family, index, 0, out);
                for (o, m) in out.iter_mut().zip(mean) {
                    *o = m + std * *o;
                }
            }
            InitialCondition::Uniform { low, high } => {
                let mut rng = family.stream(index);
                for ((o, l), h) in out.iter_mut().zip(low).zip(high) {
                    let u = 1.0 - open_unit(rand::RngCore::next_u64(&mut rng));
                    *o = l + (h - l) * u;
                }
            }
        }
    }
}

/// Scheme label recorded in run metadata.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    FrozenMeasure,
    Interacting,
}

/// Everything needed to repeat a particle run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub model_id: String,
    pub params: BTreeMap<String, f64>,
    pub kappa: f64,
    pub noise_factor: f64,
    pub seed: u64,
    pub scheme: Scheme,
    pub horizon: f64,
    pub intervals: usize,
    pub inner_steps: usize,
    pub ensemble_size: usize,
    pub law_mode: LawMode,
    pub subsample: Option<usize>,
    pub threads: Option<usize>,
}

impl RunMetadata {
    pub fn new(model: &CoefficientModel, cfg: &SolverConfig, scheme: Scheme) -> Self {
        RunMetadata {
            model_id: model.id().to_string(),
            params: model.params().clone(),
            kappa: model.kappa(),
            noise_factor: model.noise_factor(),
            seed: cfg.seed,
            scheme,
            horizon: cfg.grid.horizon(),
            intervals: cfg.grid.intervals(),
            inner_steps: cfg.inner_steps,
            ensemble_size: match scheme {
                Scheme::FrozenMeasure => cfg.law_size,
                Scheme::Interacting => cfg.particles,
            },
            law_mode: cfg.law_mode,
            subsample: cfg.subsample,
            threads: cfg.threads,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Purpose;

    #[test]
    fn config_validation() {
        let grid = TimeGrid::new(1.0, 10).unwrap();
        assert!(SolverConfig::new(grid.clone(), 2, 0).validate().is_ok());
        assert!(SolverConfig::new(grid.clone(), 1, 0).validate().is_err());
        assert!(SolverConfig::new(grid.clone(), 4, 0)
            .with_inner_steps(0)
            .validate()
            .is_err());
        assert!(SolverConfig::new(grid, 4, 0)
            .with_subsample(Some(0))
            .validate()
            .is_err());
    }

    #[test]
    fn samplers_are_index_addressed() {
        let family = StreamFamily::new(3, Purpose::Initial);
        let law = InitialCondition::Uniform {
            low: vec![-1.0, 2.0],
            high: vec![1.0, 3.0],
        };
        let mut a = [0.0; 2];
        let mut b = [0.0; 2];
        law.sample(&family, 5, &mut a);
        law.sample(&family, 6, &mut b);
        law.sample(&family, 5, &mut b);
        assert_eq!(a, b);
        assert!((-1.0..1.0).contains(&a[0]) && (2.0..3.0).contains(&a[1]));
        assert!(law.check_dim(3).is_err());
        let bad = InitialCondition::Gaussian {
            mean: vec![0.0],
            std: -1.0,
        };
        assert!(bad.check_dim(1).is_err());
    }
}
