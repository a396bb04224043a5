use std::io::{Read, Write};
use std::sync::Arc;

use crate::error::{Error, Result};

/// Weighted empirical measure: `M` atoms in `R^d` observed at one model time.
///
/// States are stored row-major (`M x d`) behind an `Arc` so that solvers can
/// publish snapshots without copying.
#[derive(Debug, Clone)]
pub struct ParticleEnsemble {
    dim: usize,
    states: Arc<[f64]>,
    weights: Arc<[f64]>,
    uniform: bool,
    time: f64,
}

fn check_states(dim: usize, states: &[f64]) -> Result<usize> {
    if dim == 0 {
        return Err(Error::param("dim", "must be at least 1"));
    }
    if states.is_empty() {
        return Err(Error::param("states", "ensemble must contain at least one atom"));
    }
    if states.len() % dim != 0 {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: states.len() % dim,
        });
    }
    if let Some(pos) = states.iter().position(|v| !v.is_finite()) {
        return Err(Error::param(
            "states",
            format!("atom {} has a non-finite coordinate", pos / dim),
        ));
    }
    Ok(states.len() / dim)
}

impl ParticleEnsemble {
    /// Uniformly weighted ensemble from row-major states.
    pub fn uniform(dim: usize, states: Vec<f64>) -> Result<Self> {
        let count = check_states(dim, &states)?;
        Ok(Self::from_parts(dim, states.into(), count, 0.0))
    }

    /// Weighted ensemble; weights are normalized to sum to one.
    pub fn weighted(dim: usize, states: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let count = check_states(dim, &states)?;
        if weights.len() != count {
            return Err(Error::param(
                "weights",
                format!("{} weights for {count} atoms", weights.len()),
            ));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::param("weights", "must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::param("weights", "total mass is zero"));
        }
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let uniform = weights.iter().all(|w| *w == weights[0]);
        Ok(ParticleEnsemble {
            dim,
            states: states.into(),
            weights: weights.into(),
            uniform,
            time: 0.0,
        })
    }

    /// Point mass at `point`.
    pub fn dirac(point: &[f64]) -> Result<Self> {
        Self::uniform(point.len(), point.to_vec())
    }

    /// Uniform ensemble over shared, already validated states.
    pub(crate) fn from_parts(dim: usize, states: Arc<[f64]>, count: usize, time: f64) -> Self {
        debug_assert_eq!(states.len(), dim * count);
        let w = 1.0 / count as f64;
        ParticleEnsemble {
            dim,
            states,
            weights: vec![w; count].into(),
            uniform: true,
            time,
        }
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }

    pub(crate) fn shared_states(&self) -> &Arc<[f64]> {
        &self.states
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `(weight, state)` pairs in storage order.
    pub fn atoms(&self) -> impl Iterator<Item = (f64, &[f64])> + '_ {
        self.weights
            .iter()
            .copied()
            .zip(self.states.chunks_exact(self.dim))
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.dim];
        for (w, x) in self.atoms() {
            for (m, xi) in mean.iter_mut().zip(x) {
                *m += w * xi;
            }
        }
        mean
    }

    /// `mu(|.|^k)` with the Euclidean norm.
    pub fn moment(&self, k: f64) -> Result<f64> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::param("k", "moment order must be positive"));
        }
        let total: f64 = self.atoms().map(|(w, x)| w * norm(x).powf(k)).sum();
        if total.is_finite() {
            Ok(total)
        } else {
            Err(Error::Overflow("moment"))
        }
    }

    /// Writes `dim,weight,x0,...,x{d-1}`, one row per atom.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        let mut header = vec!["dim".to_string(), "weight".to_string()];
        header.extend((0..self.dim).map(|j| format!("x{j}")));
        writer.write_record(&header)?;
        let dim = self.dim.to_string();
        for (w, x) in self.atoms() {
            let mut row = Vec::with_capacity(self.dim + 2);
            row.push(dim.clone());
            row.push(w.to_string());
            row.extend(x.iter().map(f64::to_string));
            writer.write_record(&row)?;
        }
        writer.flush()?;
        Ok(())
    }

    /// Parses the CSV layout written by [`write_csv`](Self::write_csv).
    /// Weights are renormalized on load.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(input);
        let header = reader.headers()?.clone();
        if header.len() < 3 || &header[0] != "dim" || &header[1] != "weight" {
            return Err(Error::parse(1, "header must start with `dim,weight,x0`"));
        }
        let dim = header.len() - 2;
        for (j, name) in header.iter().skip(2).enumerate() {
            if name != format!("x{j}") {
                return Err(Error::parse(1, format!("expected column `x{j}`, found `{name}`")));
            }
        }
        let mut states = Vec::new();
        let mut weights = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            let line = row + 2;
            if record.len() != dim + 2 {
                return Err(Error::parse(line, "wrong number of fields"));
            }
            let declared: usize = record[0]
                .parse()
                .map_err(|_| Error::parse(line, "dim is not an integer"))?;
            if declared != dim {
                return Err(Error::parse(
                    line,
                    format!("row declares dim {declared}, header has {dim}"),
                ));
            }
            weights.push(parse_f64(&record[1], line)?);
            for field in record.iter().skip(2) {
                states.push(parse_f64(field, line)?);
            }
        }
        Self::weighted(dim, states, weights)
    }
}

pub(crate) fn parse_f64(field: &str, line: usize) -> Result<f64> {
    let value: f64 = field
        .parse()
        .map_err(|_| Error::parse(line, format!("`{field}` is not a number")))?;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::parse(line, "non-finite value"))
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}
