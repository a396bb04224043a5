use super::engine::euler_update;
use crate::error::{BlowUpSite, Error, Result};
use crate::measures::{MeasureFlow, Path, TimeGrid};
use crate::models::CoefficientModel;
use crate::rng::{GaussianStream, Purpose, StreamFamily};

/// Brownian increments on a grid, one `m`-vector per interval.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    grid: TimeGrid,
    dim: usize,
    increments: Vec<f64>,
}

impl NoisePath {
    /// Increments of particle `particle` under `seed`. These are the same
    /// numbers the particle schemes use for that particle when
    /// `inner_steps = 1`.
    pub fn generate(seed: u64, particle: u64, grid: TimeGrid, dim: usize) -> Self {
        let family = StreamFamily::new(seed, Purpose::Increment);
        let mut stream = GaussianStream::new(&family, particle, dim, 0);
        let sqrt_h = grid.step().sqrt();
        let mut increments = vec![0.0; grid.intervals() * dim];
        for chunk in increments.chunks_mut(dim) {
            stream.next_step(chunk);
            chunk.iter_mut().for_each(|z| *z *= sqrt_h);
        }
        NoisePath {
            grid,
            dim,
            increments,
        }
    }

    pub fn from_increments(grid: TimeGrid, dim: usize, increments: Vec<f64>) -> Result<Self> {
        if dim == 0 || increments.len() != grid.intervals() * dim {
            return Err(Error::param(
                "increments",
                format!("expected {} values", grid.intervals() * dim),
            ));
        }
        Ok(NoisePath {
            grid,
            dim,
            increments,
        })
    }

    pub fn zero(grid: TimeGrid, dim: usize) -> Self {
        NoisePath {
            grid,
            dim,
            increments: vec![0.0; grid.intervals() * dim],
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Increment over `(t_k, t_{k+1}]`.
    pub fn increment(&self, k: usize) -> &[f64] {
        &self.increments[k * self.dim..(k + 1) * self.dim]
    }

    /// Partial sums `W(t_k)`, starting at zero.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len() * self.dim];
        for k in 0..self.grid.intervals() {
            for c in 0..self.dim {
                out[(k + 1) * self.dim + c] = out[k * self.dim + c] + self.increments[k * self.dim + c];
            }
        }
        out
    }
}

/// Euler-Maruyama for the SDE whose measure argument is read from `flow`
/// at the left endpoint of each interval. A pure function of its inputs.
pub fn decoupled_solve(
    model: &CoefficientModel,
    flow: &MeasureFlow,
    x0: &[f64],
    noise: &NoisePath,
) -> Result<Path> {
    flow.grid().ensure_same(noise.grid(), "flow and noise")?;
    let (d, m) = (model.dim(), model.noise_dim());
    if x0.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: x0.len(),
        });
    }
    if noise.dim() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: noise.dim(),
        });
    }
    if flow.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: flow.dim(),
        });
    }
    let grid = *flow.grid();
    let h = grid.step();
    let mut states = Vec::with_capacity(grid.len() * d);
    states.extend_from_slice(x0);
    let mut x = x0.to_vec();
    let mut b = vec![0.0; d];
    let mut sigma = vec![0.0; d * m];
    for k in 0..grid.intervals() {
        let t = grid.point(k);
        let frame = model.frame(flow.at(k));
        model.drift(t, &x, &frame, &mut b);
        model.diffusion(t, &x, &frame, &mut sigma);
        euler_update(&mut x, &b, &sigma, noise.increment(k), h);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp {
                time: grid.point(k + 1),
                site: BlowUpSite::Particle(0),
            });
        }
        states.extend_from_slice(&x);
    }
    Path::new(grid, d, states)
}
