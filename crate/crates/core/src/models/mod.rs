//! Coefficient models `(b, sigma)` and empirical checks of their structural
//! assumptions.
//!
//! A model never sees a law directly. Solvers hand it a [`Frame`] built from a
//! particle ensemble; the frame carries either the atoms themselves or the
//! summary statistics the model declared up front, so integrals against the
//! law are always atom averages.

mod assumptions;
mod spec;
mod zoo;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::measures::{norm, ParticleEnsemble};

pub use assumptions::{
    check_assumption, AssumptionReport, Condition, RadiusEstimate, SamplerConfig, Witness,
};
pub use spec::ModelSpec;
pub use zoo::{
    curie_weiss, cucker_smale, dorsogna, model_bounded_sin, model_cubic, model_granular,
    model_kinetic, model_linear_meanfield, model_plasma, BoundedKernel, Interaction, PairKernel,
    VectorField,
};

/// Ensemble statistic a model may declare instead of reading atoms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Statistic {
    /// `mu(x)`, contributes `d` values.
    Mean,
    /// `mu(|.|^p)`, contributes one value.
    AbsMoment(f64),
}

/// How drift and diffusion depend on the measure argument.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasureDependence {
    None,
    Summary(Vec<Statistic>),
    Atoms,
}

/// Measure argument as seen by a model.
#[derive(Debug, Clone)]
pub struct Frame {
    atoms: Option<ParticleEnsemble>,
    summary: Vec<f64>,
}

impl Frame {
    /// Atoms of the measure. Only available to models declaring
    /// [`MeasureDependence::Atoms`].
    pub fn atoms(&self) -> &ParticleEnsemble {
        self.atoms
            .as_ref()
            .expect("model read atoms without declaring MeasureDependence::Atoms")
    }

    /// Declared statistics, concatenated in declaration order.
    pub fn summary(&self) -> &[f64] {
        &self.summary
    }

    fn empty() -> Self {
        Frame {
            atoms: None,
            summary: Vec::new(),
        }
    }
}

/// Drift and diffusion of one model.
pub trait Kernel: Send + Sync {
    fn drift(&self, t: f64, x: &[f64], mu: &Frame, out: &mut [f64]);
    /// Row-major `d x m` matrix.
    fn diffusion(&self, t: f64, x: &[f64], mu: &Frame, out: &mut [f64]);
}

#[derive(Clone)]
pub struct CoefficientModel {
    id: String,
    dim: usize,
    noise_dim: usize,
    kappa: f64,
    params: BTreeMap<String, f64>,
    dependence: MeasureDependence,
    kernel: Arc<dyn Kernel>,
    noise_factor: f64,
}

impl fmt::Debug for CoefficientModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientModel")
            .field("id", &self.id)
            .field("dim", &self.dim)
            .field("noise_dim", &self.noise_dim)
            .field("kappa", &self.kappa)
            .field("params", &self.params)
            .field("dependence", &self.dependence)
            .field("noise_factor", &self.noise_factor)
            .finish()
    }
}

impl CoefficientModel {
    pub fn custom(
        id: impl Into<String>,
        dim: usize,
        noise_dim: usize,
        kappa: f64,
        dependence: MeasureDependence,
        kernel: Arc<dyn Kernel>,
    ) -> Self {
        CoefficientModel {
            id: id.into(),
            dim,
            noise_dim,
            kappa,
            params: BTreeMap::new(),
            dependence,
            kernel,
            noise_factor: 1.0,
        }
    }

    pub(crate) fn with_params<'a>(mut self, params: impl IntoIterator<Item = (&'a str, f64)>) -> Self {
        self.params
            .extend(params.into_iter().map(|(k, v)| (k.to_string(), v)));
        self
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    /// Same model with the diffusion multiplied by `factor` (e.g. `sqrt(eps)`).
    pub fn with_noise_factor(&self, factor: f64) -> Self {
        let mut scaled = self.clone();
        scaled.noise_factor *= factor;
        scaled
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn dependence(&self) -> &MeasureDependence {
        &self.dependence
    }

    pub fn noise_factor(&self) -> f64 {
        self.noise_factor
    }

    pub fn is_measure_independent(&self) -> bool {
        self.dependence == MeasureDependence::None
    }

    /// Frame for a model that ignores its measure argument.
    pub fn independent_frame(&self) -> Option<Frame> {
        self.is_measure_independent().then(Frame::empty)
    }

    /// Publishes `mu` to the model, computing the declared statistics once.
    pub fn frame(&self, mu: &ParticleEnsemble) -> Frame {
        match &self.dependence {
            MeasureDependence::None => Frame::empty(),
            MeasureDependence::Atoms => Frame {
                atoms: Some(mu.clone()),
                summary: Vec::new(),
            },
            MeasureDependence::Summary(stats) => {
                let mut summary = Vec::new();
                for stat in stats {
                    match *stat {
                        Statistic::Mean => summary.extend(mu.mean()),
                        Statistic::AbsMoment(p) => {
                            summary.push(mu.atoms().map(|(w, x)| w * norm(x).powf(p)).sum())
                        }
                    }
                }
                Frame {
                    atoms: None,
                    summary,
                }
            }
        }
    }

    /// Frame of the point mass at `x`. Non-finite `x` is passed through so the
    /// integrators can report a blow-up.
    pub fn dirac_frame(&self, x: &[f64]) -> Frame {
        self.frame(&ParticleEnsemble::from_parts(x.len(), Arc::from(x), 1, 0.0))
    }

    pub fn drift(&self, t: f64, x: &[f64], mu: &Frame, out: &mut [f64]) {
        self.kernel.drift(t, x, mu, out);
    }

    pub fn diffusion(&self, t: f64, x: &[f64], mu: &Frame, out: &mut [f64]) {
        self.kernel.diffusion(t, x, mu, out);
        if self.noise_factor != 1.0 {
            out.iter_mut().for_each(|v| *v *= self.noise_factor);
        }
    }

    /// Convenience wrapper allocating the outputs.
    pub fn eval(&self, t: f64, x: &[f64], mu: &Frame) -> (Vec<f64>, Vec<f64>) {
        let mut b = vec![0.0; self.dim];
        let mut s = vec![0.0; self.dim * self.noise_dim];
        self.drift(t, x, mu, &mut b);
        self.diffusion(t, x, mu, &mut s);
        (b, s)
    }
}
