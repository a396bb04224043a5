use serde::Serialize;

use super::control::Control;
use crate::error::{BlowUpSite, Error, Result};
use crate::measures::{Path, TimeGrid};
use crate::models::CoefficientModel;

fn blow_up(time: f64) -> Error {
    Error::BlowUp {
        time,
        site: BlowUpSite::Ode,
    }
}

/// Zero-noise limit vector field `b(t, y, delta_y)`.
fn limit_field(model: &CoefficientModel, t: f64, y: &[f64], out: &mut [f64]) {
    let frame = model.dirac_frame(y);
    model.drift(t, y, &frame, out);
}

/// Skeleton vector field `b(t, x, delta_y) + sigma(t, x, delta_y) phi` with
/// the law frozen at the limit state `y`.
fn skeleton_field(
    model: &CoefficientModel,
    t: f64,
    x: &[f64],
    y: &[f64],
    phi: Option<&[f64]>,
    sigma: &mut [f64],
    out: &mut [f64],
) {
    let frame = model.dirac_frame(y);
    model.drift(t, x, &frame, out);
    if let Some(phi) = phi {
        model.diffusion(t, x, &frame, sigma);
        let m = phi.len();
        for (i, o) in out.iter_mut().enumerate() {
            *o += sigma[i * m..(i + 1) * m].iter().zip(phi).map(|(s, p)| s * p).sum::<f64>();
        }
    }
}

#[inline]
fn stage(base: &[f64], slope: &[f64], h: f64, out: &mut [f64]) {
    for ((o, b), s) in out.iter_mut().zip(base).zip(slope) {
        *o = b + h * s;
    }
}

#[inline]
fn combine(x: &mut [f64], h: f64, k: [&[f64]; 4]) {
    for (i, xi) in x.iter_mut().enumerate() {
        *xi += h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
    }
}

/// Classical RK4 for `y' = b(t, y, delta_y)`.
pub fn limit_ode(model: &CoefficientModel, x0: &[f64], grid: TimeGrid) -> Result<Path> {
    let d = model.dim();
    if x0.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: x0.len(),
        });
    }
    let h = grid.step();
    let mut y = x0.to_vec();
    let mut states = Vec::with_capacity(grid.len() * d);
    states.extend_from_slice(&y);
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    let mut tmp = vec![0.0; d];
    for k in 0..grid.intervals() {
        let t = grid.point(k);
        limit_field(model, t, &y, &mut k1);
        stage(&y, &k1, h / 2.0, &mut tmp);
        limit_field(model, t + h / 2.0, &tmp, &mut k2);
        stage(&y, &k2, h / 2.0, &mut tmp);
        limit_field(model, t + h / 2.0, &tmp, &mut k3);
        stage(&y, &k3, h, &mut tmp);
        limit_field(model, t + h, &tmp, &mut k4);
        combine(&mut y, h, [&k1, &k2, &k3, &k4]);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(blow_up(grid.point(k + 1)));
        }
        states.extend_from_slice(&y);
    }
    Path::new(grid, d, states)
}

/// Skeleton equation `x' = b(t, x, delta_{y(t)}) + sigma(t, x, delta_{y(t)}) phi(t)`.
///
/// The measure argument is the point mass at the zero-noise limit `y`, not
/// the law of the controlled path. `y` is integrated alongside `x` with the
/// same RK4 stages and re-seeded from `limit` at every grid point, so a zero
/// control reproduces [`limit_ode`] bit for bit.
pub fn skeleton_solve(
    model: &CoefficientModel,
    x0: &[f64],
    control: &Control,
    limit: &Path,
) -> Result<Path> {
    let grid = *control.grid();
    grid.ensure_same(limit.grid(), "control and limit path")?;
    let (d, m) = (model.dim(), model.noise_dim());
    if x0.len() != d || limit.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: if x0.len() != d { x0.len() } else { limit.dim() },
        });
    }
    if control.dim() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: control.dim(),
        });
    }
    let h = grid.step();
    let mut x = x0.to_vec();
    let mut states = Vec::with_capacity(grid.len() * d);
    states.extend_from_slice(&x);
    let mut sigma = vec![0.0; d * m];
    let mut kx: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; d]);
    let mut ky: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; d]);
    let (mut xs, mut ys) = (vec![0.0; d], vec![0.0; d]);
    for k in 0..grid.intervals() {
        let t = grid.point(k);
        let phi = control.value(k);
        let phi = if phi.iter().all(|v| *v == 0.0) { None } else { Some(phi) };
        let y = limit.at(k);
        let times = [t, t + h / 2.0, t + h / 2.0, t + h];
        let weights = [0.0, h / 2.0, h / 2.0, h];
        for s in 0..4 {
            if s == 0 {
                xs.copy_from_slice(&x);
                ys.copy_from_slice(y);
            } else {
                stage(&x, &kx[s - 1], weights[s], &mut xs);
                stage(y, &ky[s - 1], weights[s], &mut ys);
            }
            limit_field(model, times[s], &ys, &mut ky[s]);
            skeleton_field(model, times[s], &xs, &ys, phi, &mut sigma, &mut kx[s]);
        }
        combine(&mut x, h, [&kx[0], &kx[1], &kx[2], &kx[3]]);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(blow_up(grid.point(k + 1)));
        }
        states.extend_from_slice(&x);
    }
    Path::new(grid, d, states)
}

/// Sup-norm skeleton gap for one approximating control.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub pieces: usize,
    pub gap: f64,
}

/// Gaps `sup_t |x^{phi_n}(t) - x^{phi}(t)|` between skeleton paths driven by
/// each approximation `phi_n` and by `target`, all solved on the target grid.
pub fn control_convergence_probe(
    model: &CoefficientModel,
    x0: &[f64],
    target: &Control,
    refinements: &[Control],
) -> Result<Vec<ConvergenceRow>> {
    let grid = *target.grid();
    let limit = limit_ode(model, x0, grid)?;
    let reference = skeleton_solve(model, x0, target, &limit)?;
    refinements
        .iter()
        .map(|approx| {
            let lifted = approx.lift(&grid)?;
            let path = skeleton_solve(model, x0, &lifted, &limit)?;
            Ok(ConvergenceRow {
                pieces: approx.grid().intervals(),
                gap: path.sup_distance(&reference)?,
            })
        })
        .collect()
}
