use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::basis::{eigenvalue, SineBasis};
use crate::error::{BlowUpSite, Error, Result};
use crate::measures::TimeGrid;
use crate::rng::{standard_normals, GaussianStream, Purpose, StreamFamily};

/// Field given by its sine coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::param("coeffs", "need at least one mode"));
        }
        if let Some(k) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::BlowUp {
                time: 0.0,
                site: BlowUpSite::Mode { field: 0, mode: k + 1 },
            });
        }
        Ok(SpectralField { coeffs })
    }

    pub fn zero(modes: usize) -> Self {
        SpectralField {
            coeffs: vec![0.0; modes],
        }
    }

    /// `amplitude * sin(mode pi x)` in physical units.
    pub fn sine(modes: usize, mode: usize, amplitude: f64) -> Result<Self> {
        if mode == 0 || mode > modes {
            return Err(Error::param("mode", format!("must lie in 1..={modes}")));
        }
        let mut coeffs = vec![0.0; modes];
        coeffs[mode - 1] = amplitude / std::f64::consts::SQRT_2;
        SpectralField::new(coeffs)
    }

    pub fn modes(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `sum lambda_k^{-1} u_k^2`.
    pub fn h_norm_sq(&self) -> f64 {
        h_norm_sq(&self.coeffs)
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// `||u||_{L^p}^p` on the grid of `basis`.
    pub fn lp_norm_pow(&self, basis: &SineBasis, p: f64) -> f64 {
        let mut values = vec![0.0; basis.points()];
        basis.lp_integral(&self.coeffs, p, &mut values)
    }
}

pub(crate) fn h_norm_sq(coeffs: &[f64]) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| c * c / eigenvalue(k + 1))
        .sum()
}

/// `Psi(u) = |u|^{r-1} u` applied pointwise and projected back onto the
/// modes of `field`, on the grid of [`SineBasis::for_exponent`].
pub fn psi_apply(field: &SpectralField, r: f64) -> Result<SpectralField> {
    let basis = SineBasis::for_exponent(field.modes(), r)?;
    let mut values = vec![0.0; basis.points()];
    let mut out = vec![0.0; field.modes()];
    basis.psi(&field.coeffs, r, &mut values, &mut out);
    if out.iter().any(|c| !c.is_finite()) {
        return Err(Error::Overflow("psi_apply"));
    }
    Ok(SpectralField { coeffs: out })
}

/// Initial fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldInit {
    Zero,
    /// `amplitude * sin(mode pi x)` for every field.
    Sine { mode: usize, amplitude: f64 },
    /// The same coefficient vector for every field.
    Coefficients { coeffs: Vec<f64> },
    /// Independent coefficients `amplitude k^{-decay} z_k`.
    Random { amplitude: f64, decay: f64 },
}

impl FieldInit {
    fn fill(&self, family: &StreamFamily, field: usize, out: &mut [f64]) -> Result<()> {
        let modes = out.len();
        match self {
            FieldInit::Zero => out.fill(0.0),
            FieldInit::Sine { mode, amplitude } => {
                out.copy_from_slice(SpectralField::sine(modes, *mode, *amplitude)?.coeffs())
            }
            FieldInit::Coefficients { coeffs } => {
                if coeffs.len() != modes {
                    return Err(Error::DimensionMismatch {
                        expected: modes,
                        found: coeffs.len(),
                    });
                }
                out.copy_from_slice(coeffs);
            }
            FieldInit::Random { amplitude, decay } => {
                standard_normals(family, field as u64, 0, out);
                for (k, c) in out.iter_mut().enumerate() {
                    *c *= amplitude * ((k + 1) as f64).powf(-decay);
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpdeConfig {
    /// Galerkin dimension `K`.
    pub modes: usize,
    /// Weights `q_k` of the driven modes `k = 1..=len`; empty means no noise.
    #[serde(default)]
    pub noise_weights: Vec<f64>,
    /// Porous-media exponent `r > 1`.
    pub r: f64,
    /// Field-ensemble size `M`.
    pub fields: usize,
    pub grid: TimeGrid,
    pub seed: u64,
    /// Keep every `record_every`-th step; the final time is always kept.
    #[serde(default = "one")]
    pub record_every: usize,
}

fn one() -> usize {
    1
}

impl SpdeConfig {
    pub fn new(modes: usize, r: f64, fields: usize, grid: TimeGrid, seed: u64) -> Self {
        SpdeConfig {
            modes,
            noise_weights: Vec::new(),
            r,
            fields,
            grid,
            seed,
            record_every: 1,
        }
    }

    /// Drives the first `driven` modes with weights `amplitude / k`.
    pub fn with_decaying_noise(mut self, driven: usize, amplitude: f64) -> Self {
        self.noise_weights = (1..=driven).map(|k| amplitude / k as f64).collect();
        self
    }

    pub fn with_record_every(mut self, stride: usize) -> Self {
        self.record_every = stride;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes == 0 {
            return Err(Error::param("modes", "must be at least 1"));
        }
        if self.noise_weights.len() > self.modes {
            return Err(Error::param("noise_weights", "more driven modes than Galerkin modes"));
        }
        if self.noise_weights.iter().any(|q| !q.is_finite()) {
            return Err(Error::param("noise_weights", "must be finite"));
        }
        if !(self.r > 1.0 && self.r.is_finite()) {
            return Err(Error::param("r", "must be finite and > 1"));
        }
        if self.fields == 0 {
            return Err(Error::param("fields", "must be at least 1"));
        }
        if self.record_every == 0 {
            return Err(Error::param("record_every", "must be at least 1"));
        }
        Ok(())
    }
}

/// Recorded coefficient paths of all fields.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdeRun {
    modes: usize,
    fields: usize,
    r: f64,
    times: Vec<f64>,
    /// Frame-major, then field, then mode.
    coeffs: Vec<f64>,
}

impl SpdeRun {
    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn fields(&self) -> usize {
        self.fields
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Coefficients of `field` at recorded frame `frame`.
    pub fn coeffs(&self, frame: usize, field: usize) -> &[f64] {
        let start = (frame * self.fields + field) * self.modes;
        &self.coeffs[start..start + self.modes]
    }

    pub fn field_at(&self, frame: usize, field: usize) -> SpectralField {
        SpectralField {
            coeffs: self.coeffs(frame, field).to_vec(),
        }
    }

    #[cfg(test)]
    pub(crate) fn overwrite_for_test(&mut self, field: &SpectralField) {
        for chunk in self.coeffs.chunks_mut(self.modes) {
            chunk.copy_from_slice(field.coeffs());
        }
    }

    /// CSV `time,field,mode,coeff`; modes are numbered from 1.
    pub fn write_coeff_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time", "field", "mode", "coeff"])?;
        for (i, t) in self.times.iter().enumerate() {
            for f in 0..self.fields {
                for (k, c) in self.coeffs(i, f).iter().enumerate() {
                    w.write_record([t.to_string(), f.to_string(), (k + 1).to_string(), c.to_string()])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// CSV `time,field,x,u` on the grid of `basis` for the given recorded
    /// frames.
    pub fn write_physical_csv<W: Write>(&self, basis: &SineBasis, frames: &[usize], out: W) -> Result<()> {
        if basis.modes() != self.modes {
            return Err(Error::DimensionMismatch {
                expected: self.modes,
                found: basis.modes(),
            });
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time", "field", "x", "u"])?;
        let mut values = vec![0.0; basis.points()];
        for &i in frames {
            if i >= self.times.len() {
                return Err(Error::param("frames", format!("frame {i} was not recorded")));
            }
            for f in 0..self.fields {
                basis.inverse(self.coeffs(i, f), &mut values);
                for (j, u) in values.iter().enumerate() {
                    w.write_record([
                        self.times[i].to_string(),
                        f.to_string(),
                        basis.node(j).to_string(),
                        u.to_string(),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

struct Scratch {
    values: Vec<f64>,
    psi: Vec<f64>,
    z: Vec<f64>,
}

/// Euler-Maruyama for the Galerkin system
/// `dX_k = [-lambda_k Psi_k(X) + X_k - mean_k] dt + q_k X_k d beta_k`,
/// where `mean` is the ensemble mean of the fields at the start of the step.
pub fn spde_solve(cfg: &SpdeConfig, init: &FieldInit) -> Result<SpdeRun> {
    cfg.validate()?;
    let (k_modes, m) = (cfg.modes, cfg.fields);
    let basis = SineBasis::for_exponent(k_modes, cfg.r)?;
    let lambda: Vec<f64> = (1..=k_modes).map(eigenvalue).collect();
    let driven = cfg.noise_weights.len();

    let init_family = StreamFamily::new(cfg.seed, Purpose::SpdeInit);
    let mut state = vec![0.0; m * k_modes];
    for (f, chunk) in state.chunks_mut(k_modes).enumerate() {
        init.fill(&init_family, f, chunk)?;
    }
    check_finite(&state, k_modes, 0.0)?;
    let noise_family = StreamFamily::new(cfg.seed, Purpose::SpdeNoise);
    let mut streams: Vec<Option<GaussianStream>> = (0..m as u64)
        .map(|f| (driven > 0).then(|| GaussianStream::new(&noise_family, f, driven, 0)))
        .collect();

    let grid = cfg.grid;
    let h = grid.step();
    let sqrt_h = h.sqrt();
    let mut times = vec![0.0];
    let mut recorded = state.clone();
    let mut mean = vec![0.0; k_modes];
    for step in 0..grid.intervals() {
        mean.fill(0.0);
        for chunk in state.chunks(k_modes) {
            for (a, c) in mean.iter_mut().zip(chunk) {
                *a += c;
            }
        }
        mean.iter_mut().for_each(|a| *a /= m as f64);
        state
            .par_chunks_mut(k_modes)
            .zip(streams.par_iter_mut())
            .for_each_init(
                || Scratch {
                    values: vec![0.0; basis.points()],
                    psi: vec![0.0; k_modes],
                    z: vec![0.0; driven],
                },
                |s, (x, stream)| {
                    basis.psi(x, cfg.r, &mut s.values, &mut s.psi);
                    if let Some(stream) = stream {
                        stream.next_step(&mut s.z);
                    }
                    for k in 0..k_modes {
                        let drift = -lambda[k] * s.psi[k] + (x[k] - mean[k]);
                        let mut next = x[k] + drift * h;
                        if k < driven {
                            next += cfg.noise_weights[k] * x[k] * sqrt_h * s.z[k];
                        }
                        x[k] = next;
                    }
                },
            );
        let t = grid.point(step + 1);
        check_finite(&state, k_modes, t)?;
        if (step + 1) % cfg.record_every == 0 || step + 1 == grid.intervals() {
            times.push(t);
            recorded.extend_from_slice(&state);
        }
    }
    Ok(SpdeRun {
        modes: k_modes,
        fields: m,
        r: cfg.r,
        times,
        coeffs: recorded,
    })
}

fn check_finite(state: &[f64], modes: usize, time: f64) -> Result<()> {
    match state.iter().position(|v| !v.is_finite()) {
        Some(pos) => Err(Error::BlowUp {
            time,
            site: BlowUpSite::Mode {
                field: pos / modes,
                mode: pos % modes + 1,
            },
        }),
        None => Ok(()),
    }
}

/// Energy quantities of one field path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldEnergy {
    /// `sup_t ||X||_H^2`.
    pub sup_h_sq: f64,
    /// `int_0^T ||X||_{L^{r+1}}^{r+1} dt`, trapezoid rule over recorded times.
    pub lr_integral: f64,
    /// `sup_t ||X||_H^p`.
    pub sup_h_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub per_field: Vec<FieldEnergy>,
    pub mean: FieldEnergy,
}

/// Energy quantities per field and averaged over the ensemble.
pub fn energy_report(run: &SpdeRun, p: f64) -> Result<EnergyReport> {
    let basis = SineBasis::for_exponent(run.modes, run.r)?;
    let alpha = run.r + 1.0;
    let frames = run.times.len();
    let per_field: Vec<FieldEnergy> = (0..run.fields)
        .into_par_iter()
        .map(|f| {
            let mut values = vec![0.0; basis.points()];
            let mut sup_h_sq = 0.0f64;
            let mut integral = 0.0;
            let mut prev: Option<(f64, f64)> = None;
            for i in 0..frames {
                let c = run.coeffs(i, f);
                sup_h_sq = sup_h_sq.max(h_norm_sq(c));
                let lr = basis.lp_integral(c, alpha, &mut values);
                let t = run.times[i];
                if let Some((t0, v0)) = prev {
                    integral += 0.5 * (t - t0) * (v0 + lr);
                }
                prev = Some((t, lr));
            }
            FieldEnergy {
                sup_h_sq,
                lr_integral: integral,
                sup_h_p: sup_h_sq.powf(p / 2.0),
            }
        })
        .collect();
    let n = per_field.len() as f64;
    let mean = FieldEnergy {
        sup_h_sq: per_field.iter().map(|e| e.sup_h_sq).sum::<f64>() / n,
        lr_integral: per_field.iter().map(|e| e.lr_integral).sum::<f64>() / n,
        sup_h_p: per_field.iter().map(|e| e.sup_h_p).sum::<f64>() / n,
    };
    Ok(EnergyReport { per_field, mean })
}
