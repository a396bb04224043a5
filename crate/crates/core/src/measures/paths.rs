use std::sync::Arc;

use super::ensemble::{norm, norm_sq, ParticleEnsemble};
use super::grid::TimeGrid;
use crate::error::{Error, Result};

/// One trajectory sampled on every point of a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    grid: TimeGrid,
    dim: usize,
    states: Vec<f64>,
}

impl Path {
    pub fn new(grid: TimeGrid, dim: usize, states: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", "must be at least 1"));
        }
        if states.len() != grid.len() * dim {
            return Err(Error::param(
                "states",
                format!("expected {} values, got {}", grid.len() * dim, states.len()),
            ));
        }
        if let Some(pos) = states.iter().position(|v| !v.is_finite()) {
            return Err(Error::BlowUp {
                time: grid.point(pos / dim),
                site: crate::error::BlowUpSite::Ode,
            });
        }
        Ok(Path { grid, dim, states })
    }

    /// Constant path at `x`.
    pub fn constant(grid: TimeGrid, x: &[f64]) -> Self {
        let states = x.iter().copied().cycle().take(grid.len() * x.len()).collect();
        Path {
            grid,
            dim: x.len(),
            states,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn at(&self, k: usize) -> &[f64] {
        &self.states[k * self.dim..(k + 1) * self.dim]
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }

    /// `sup_k |x(t_k)|`.
    pub fn sup_norm(&self) -> f64 {
        self.states
            .chunks_exact(self.dim)
            .map(norm)
            .fold(0.0, f64::max)
    }

    /// `sup_k |self(t_k) - other(t_k)|` on a shared grid.
    pub fn sup_distance(&self, other: &Path) -> Result<f64> {
        self.grid.ensure_same(&other.grid, "sup distance")?;
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(self
            .states
            .chunks_exact(self.dim)
            .zip(other.states.chunks_exact(self.dim))
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max))
    }
}

/// Many paths on one grid, stored time-major: frame `k` holds every particle's
/// state at `t_k`.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    grid: TimeGrid,
    dim: usize,
    count: usize,
    frames: Vec<Arc<[f64]>>,
    pairing: Option<Vec<usize>>,
}

impl PathEnsemble {
    pub fn from_frames(grid: TimeGrid, dim: usize, frames: Vec<Arc<[f64]>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", "must be at least 1"));
        }
        if frames.len() != grid.len() {
            return Err(Error::param(
                "frames",
                format!("expected {} frames, got {}", grid.len(), frames.len()),
            ));
        }
        let width = frames[0].len();
        if width == 0 || width % dim != 0 || frames.iter().any(|f| f.len() != width) {
            return Err(Error::param("frames", "frames must have equal, nonzero length"));
        }
        for (k, frame) in frames.iter().enumerate() {
            if let Some(pos) = frame.iter().position(|v| !v.is_finite()) {
                return Err(Error::BlowUp {
                    time: grid.point(k),
                    site: crate::error::BlowUpSite::Particle(pos / dim),
                });
            }
        }
        Ok(PathEnsemble {
            grid,
            dim,
            count: width / dim,
            frames,
            pairing: None,
        })
    }

    pub fn from_paths(paths: &[Path]) -> Result<Self> {
        let first = paths
            .first()
            .ok_or_else(|| Error::param("paths", "need at least one path"))?;
        let (grid, dim) = (first.grid, first.dim);
        for p in paths {
            grid.ensure_same(&p.grid, "path ensemble")?;
            if p.dim != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.dim,
                });
            }
        }
        let frames = (0..grid.len())
            .map(|k| {
                paths
                    .iter()
                    .flat_map(|p| p.at(k).iter().copied())
                    .collect::<Vec<_>>()
                    .into()
            })
            .collect();
        Self::from_frames(grid, dim, frames)
    }

    /// Attaches an index coupling `i -> pairing[i]` into a second ensemble.
    pub fn with_pairing(mut self, pairing: Vec<usize>) -> Result<Self> {
        if pairing.len() != self.count {
            return Err(Error::param("pairing", "length must equal the path count"));
        }
        let mut seen = vec![false; self.count];
        for &j in &pairing {
            if j >= self.count || seen[j] {
                return Err(Error::param("pairing", "must be a permutation of indices"));
            }
            seen[j] = true;
        }
        self.pairing = Some(pairing);
        Ok(self)
    }

    /// Identity coupling.
    pub fn with_identity_pairing(self) -> Self {
        let count = self.count;
        PathEnsemble {
            pairing: Some((0..count).collect()),
            ..self
        }
    }

    pub fn pairing(&self) -> Option<&[usize]> {
        self.pairing.as_deref()
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn frame(&self, k: usize) -> &[f64] {
        &self.frames[k]
    }

    pub fn state(&self, particle: usize, k: usize) -> &[f64] {
        &self.frames[k][particle * self.dim..(particle + 1) * self.dim]
    }

    pub fn path(&self, particle: usize) -> Path {
        let states = (0..self.grid.len())
            .flat_map(|k| self.state(particle, k).iter().copied())
            .collect();
        Path {
            grid: self.grid,
            dim: self.dim,
            states,
        }
    }

    /// Uniform empirical measure of all particles at `t_k` (shares storage).
    pub fn snapshot(&self, k: usize) -> ParticleEnsemble {
        ParticleEnsemble::from_parts(self.dim, self.frames[k].clone(), self.count, self.grid.point(k))
    }

    pub fn to_flow(&self) -> MeasureFlow {
        MeasureFlow {
            grid: self.grid,
            ensembles: (0..self.grid.len()).map(|k| self.snapshot(k)).collect(),
        }
    }

    /// Empirical mean of `component` at each grid point, with the standard error
    /// of the mean.
    pub fn component_stats(&self, component: usize) -> Vec<(f64, f64)> {
        let n = self.count as f64;
        (0..self.grid.len())
            .map(|k| {
                let values = self.frames[k].iter().skip(component).step_by(self.dim);
                let mean = values.clone().sum::<f64>() / n;
                let var = if self.count > 1 {
                    values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
                } else {
                    0.0
                };
                (mean, (var / n).sqrt())
            })
            .collect()
    }
}

/// Grid-aligned sequence of ensembles standing in for `t -> mu(t)`.
#[derive(Debug, Clone)]
pub struct MeasureFlow {
    grid: TimeGrid,
    ensembles: Vec<ParticleEnsemble>,
}

impl MeasureFlow {
    pub fn new(grid: TimeGrid, ensembles: Vec<ParticleEnsemble>) -> Result<Self> {
        if ensembles.len() != grid.len() {
            return Err(Error::param(
                "ensembles",
                format!("expected {} ensembles, got {}", grid.len(), ensembles.len()),
            ));
        }
        let (dim, size) = (ensembles[0].dim(), ensembles[0].len());
        for e in &ensembles {
            if e.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: e.dim(),
                });
            }
            if e.len() != size {
                return Err(Error::param("ensembles", "ensemble size must be constant in time"));
            }
        }
        let ensembles = ensembles
            .into_iter()
            .enumerate()
            .map(|(k, e)| e.with_time(grid.point(k)))
            .collect();
        Ok(MeasureFlow { grid, ensembles })
    }

    /// Every grid point carries the same ensemble.
    pub fn constant(grid: TimeGrid, ensemble: ParticleEnsemble) -> Self {
        let ensembles = grid
            .points()
            .map(|t| ensemble.clone().with_time(t))
            .collect();
        MeasureFlow { grid, ensembles }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.ensembles[0].dim()
    }

    pub fn size(&self) -> usize {
        self.ensembles[0].len()
    }

    pub fn at(&self, k: usize) -> &ParticleEnsemble {
        &self.ensembles[k]
    }

    pub fn ensembles(&self) -> &[ParticleEnsemble] {
        &self.ensembles
    }
}

/// First grid index at which `|path(t_k)| >= radius`, or the last index.
fn exit_index(paths: &PathEnsemble, particle: usize, radius: f64) -> usize {
    (0..paths.grid.len())
        .find(|&k| norm(paths.state(particle, k)) >= radius)
        .unwrap_or(paths.grid.intervals())
}

/// Stopped path-space `W_2` evaluated on the coupling carried by `a`:
/// `(mean_i sup_t |xi_i(t ^ tau) - eta_{pi(i)}(t ^ tau)|^2)^(1/2)` with
/// `tau = tau_R(xi_i) ^ tau_R(eta_{pi(i)})` resolved on the grid.
///
/// Because the coupling is supplied rather than optimized, this is an upper
/// bound for the infimum over couplings.
pub fn local_path_w2(a: &PathEnsemble, b: &PathEnsemble, radius: f64) -> Result<f64> {
    let pairing = a.pairing().ok_or(Error::MissingPairing)?;
    a.grid.ensure_same(&b.grid, "local path W2")?;
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            found: b.dim,
        });
    }
    if a.count != b.count {
        return Err(Error::param("pairing", "ensembles have different sizes"));
    }
    if !(radius > 0.0) {
        return Err(Error::param("radius", "must be positive"));
    }
    let total: f64 = pairing
        .iter()
        .enumerate()
        .map(|(i, &j)| {
            let stop = exit_index(a, i, radius).min(exit_index(b, j, radius));
            let mut sup = 0.0f64;
            let mut diff = vec![0.0; a.dim];
            for k in 0..=stop {
                for ((d, x), y) in diff.iter_mut().zip(a.state(i, k)).zip(b.state(j, k)) {
                    *d = x - y;
                }
                sup = sup.max(norm_sq(&diff));
            }
            sup
        })
        .sum();
    Ok((total / a.count as f64).sqrt())
}
