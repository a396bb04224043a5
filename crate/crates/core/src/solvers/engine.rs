//! Lockstep Euler-Maruyama over a particle population.

use std::sync::Arc;

use rand::seq::index;
use rayon::prelude::*;

use super::config::{InitialSampler, LawMode, SolverConfig};
use crate::error::{BlowUpSite, Error, Result};
use crate::measures::{MeasureFlow, ParticleEnsemble, PathEnsemble};
use crate::models::{CoefficientModel, Frame, MeasureDependence};
use crate::rng::{GaussianStream, Purpose, StreamFamily};

/// `x += b h + sigma dw`, with `sigma` row-major `d x m`.
#[inline]
pub(crate) fn euler_update(x: &mut [f64], b: &[f64], sigma: &[f64], dw: &[f64], h: f64) {
    let m = dw.len();
    for (i, xi) in x.iter_mut().enumerate() {
        let mut incr = b[i] * h;
        for (s, w) in sigma[i * m..(i + 1) * m].iter().zip(dw) {
            incr += s * w;
        }
        *xi += incr;
    }
}

struct Scratch {
    b: Vec<f64>,
    sigma: Vec<f64>,
    dw: Vec<f64>,
}

impl Scratch {
    fn new(d: usize, m: usize) -> Self {
        Scratch {
            b: vec![0.0; d],
            sigma: vec![0.0; d * m],
            dw: vec![0.0; m],
        }
    }
}

struct Population {
    dim: usize,
    noise_dim: usize,
    states: Vec<f64>,
    streams: Vec<GaussianStream>,
}

impl Population {
    fn new(
        model: &CoefficientModel,
        sampler: &dyn InitialSampler,
        seed: u64,
        count: usize,
        index_offset: u64,
        noise: Purpose,
    ) -> Result<Self> {
        let dim = model.dim();
        let noise_dim = model.noise_dim();
        sampler.check_dim(dim)?;
        let init = StreamFamily::new(seed, Purpose::Initial);
        let mut states = vec![0.0; count * dim];
        states
            .par_chunks_mut(dim)
            .enumerate()
            .for_each(|(i, x)| sampler.sample(&init, index_offset + i as u64, x));
        if let Some(pos) = states.iter().position(|v| !v.is_finite()) {
            return Err(Error::BlowUp {
                time: 0.0,
                site: BlowUpSite::Particle(pos / dim),
            });
        }
        let family = StreamFamily::new(seed, noise);
        let streams = (0..count as u64)
            .map(|i| GaussianStream::new(&family, i, noise_dim, 0))
            .collect();
        Ok(Population {
            dim,
            noise_dim,
            states,
            streams,
        })
    }

    fn count(&self) -> usize {
        self.states.len() / self.dim
    }

    fn shared(&self) -> Arc<[f64]> {
        Arc::from(self.states.as_slice())
    }

    fn advance(&mut self, model: &CoefficientModel, frame: &Frame, t: f64, h: f64) -> Result<()> {
        let (d, m) = (self.dim, self.noise_dim);
        let sqrt_h = h.sqrt();
        self.states
            .par_chunks_mut(d)
            .zip(self.streams.par_iter_mut())
            .for_each_init(
                || Scratch::new(d, m),
                |s, (x, stream)| {
                    model.drift(t, x, frame, &mut s.b);
                    model.diffusion(t, x, frame, &mut s.sigma);
                    stream.next_step(&mut s.dw);
                    s.dw.iter_mut().for_each(|z| *z *= sqrt_h);
                    euler_update(x, &s.b, &s.sigma, &s.dw, h);
                },
            );
        match self.states.iter().position(|v| !v.is_finite()) {
            Some(pos) => Err(Error::BlowUp {
                time: t + h,
                site: BlowUpSite::Particle(pos / d),
            }),
            None => Ok(()),
        }
    }
}

/// Publishes the measure argument, optionally thinned for pairwise kernels.
struct Publisher<'a> {
    model: &'a CoefficientModel,
    subsample: Option<(usize, StreamFamily)>,
}

impl<'a> Publisher<'a> {
    fn new(model: &'a CoefficientModel, cfg: &SolverConfig) -> Self {
        let subsample = match (model.dependence(), cfg.subsample) {
            (MeasureDependence::Atoms, Some(size)) => Some((
                size,
                StreamFamily::new(cfg.seed, Purpose::Subsample),
            )),
            _ => None,
        };
        Publisher { model, subsample }
    }

    fn frame(&self, states: &Arc<[f64]>, time: f64, step: u64) -> Frame {
        if let Some(frame) = self.model.independent_frame() {
            return frame;
        }
        let d = self.model.dim();
        let count = states.len() / d;
        match &self.subsample {
            Some((size, family)) if *size < count => {
                let mut rng = family.stream(step);
                let mut picked = index::sample(&mut rng, count, *size).into_vec();
                picked.sort_unstable();
                let mut thin = Vec::with_capacity(size * d);
                for i in picked {
                    thin.extend_from_slice(&states[i * d..(i + 1) * d]);
                }
                let n = thin.len() / d;
                self.model
                    .frame(&ParticleEnsemble::from_parts(d, Arc::from(thin), n, time))
            }
            _ => self
                .model
                .frame(&ParticleEnsemble::from_parts(d, states.clone(), count, time)),
        }
    }
}

fn check_model(model: &CoefficientModel, cfg: &SolverConfig) -> Result<()> {
    cfg.validate()?;
    if model.dim() == 0 || model.noise_dim() == 0 {
        return Err(Error::param("model", "state and noise dimensions must be positive"));
    }
    Ok(())
}

/// Frozen-measure Euler scheme.
///
/// On each outer interval `(t_k, t_{k+1}]` every particle takes
/// `inner_steps` Euler substeps with the measure argument fixed at the
/// ensemble snapshot taken at `t_k`. Returns the snapshots and the particle
/// paths on the outer grid; in the self-consistent mode both share storage.
pub fn euler_frozen_measure(
    model: &CoefficientModel,
    cfg: &SolverConfig,
    sampler: &dyn InitialSampler,
) -> Result<(MeasureFlow, PathEnsemble)> {
    check_model(model, cfg)?;
    let grid = cfg.grid;
    let inner = cfg.inner_steps;
    let h = cfg.substep();
    let m = cfg.law_size;
    let mut main = Population::new(model, sampler, cfg.seed, m, 0, Purpose::Increment)?;
    let mut copy = match cfg.law_mode {
        LawMode::SelfConsistent => None,
        LawMode::IndependentCopy => Some(Population::new(
            model,
            sampler,
            cfg.seed,
            m,
            m as u64,
            Purpose::LawCopy,
        )?),
    };
    let publisher = Publisher::new(model, cfg);

    let mut frames = Vec::with_capacity(grid.len());
    let mut law_frames = Vec::with_capacity(if copy.is_some() { grid.len() } else { 0 });
    frames.push(main.shared());
    if let Some(c) = &copy {
        law_frames.push(c.shared());
    }
    for k in 0..grid.intervals() {
        let t_k = grid.point(k);
        let law = match &copy {
            Some(_) => law_frames[k].clone(),
            None => frames[k].clone(),
        };
        let frame = publisher.frame(&law, t_k, k as u64);
        for j in 0..inner {
            let t = t_k + j as f64 * h;
            main.advance(model, &frame, t, h)?;
            if let Some(c) = copy.as_mut() {
                c.advance(model, &frame, t, h)?;
            }
        }
        frames.push(main.shared());
        if let Some(c) = &copy {
            law_frames.push(c.shared());
        }
    }
    let d = model.dim();
    let paths = PathEnsemble::from_frames(grid, d, frames)?;
    let flow = match copy {
        None => paths.to_flow(),
        Some(c) => {
            let count = c.count();
            let ensembles = law_frames
                .into_iter()
                .map(|f| ParticleEnsemble::from_parts(d, f, count, 0.0))
                .collect();
            MeasureFlow::new(grid, ensembles)?
        }
    };
    Ok((flow, paths))
}

/// Interacting particle system: the current empirical measure of all `N`
/// particles feeds the coefficients at every substep.
pub fn interacting_particles(
    model: &CoefficientModel,
    cfg: &SolverConfig,
    sampler: &dyn InitialSampler,
) -> Result<PathEnsemble> {
    check_model(model, cfg)?;
    let grid = cfg.grid;
    let inner = cfg.inner_steps;
    let h = cfg.substep();
    let mut pop = Population::new(model, sampler, cfg.seed, cfg.particles, 0, Purpose::Increment)?;
    let publisher = Publisher::new(model, cfg);
    let mut frames = Vec::with_capacity(grid.len());
    let mut current = pop.shared();
    frames.push(current.clone());
    for k in 0..grid.intervals() {
        let t_k = grid.point(k);
        for j in 0..inner {
            let t = t_k + j as f64 * h;
            let step = (k * inner + j) as u64;
            let frame = publisher.frame(&current, t, step);
            pop.advance(model, &frame, t, h)?;
            current = pop.shared();
        }
        frames.push(current.clone());
    }
    PathEnsemble::from_frames(grid, model.dim(), frames)
}
