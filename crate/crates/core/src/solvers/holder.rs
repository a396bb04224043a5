use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::PathEnsemble;

/// Mean `q`-th power increment at one lag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IncrementStat {
    pub lag: f64,
    pub mean: f64,
    pub samples: usize,
}

/// Averages `|X(t + lag) - X(t)|^q` over particles and all grid times `t`
/// with `t + lag <= T`.
pub fn holder_increment_stats(
    paths: &PathEnsemble,
    q: f64,
    lags: &[f64],
) -> Result<Vec<IncrementStat>> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::param("q", "must be positive"));
    }
    let grid = paths.grid();
    let step = grid.step();
    let d = paths.dim();
    lags.iter()
        .map(|&lag| {
            if !(lag > 0.0) || lag > grid.horizon() * (1.0 + 1e-12) {
                return Err(Error::param("lag", format!("{lag} outside (0, T]")));
            }
            let ratio = lag / step;
            let s = ratio.round();
            if (ratio - s).abs() > 1e-9 * ratio.max(1.0) {
                return Err(Error::param("lag", format!("{lag} is not a multiple of the step")));
            }
            let s = s as usize;
            let starts = grid.intervals() + 1 - s;
            let total: f64 = (0..starts)
                .into_par_iter()
                .map(|k| {
                    let (a, b) = (paths.frame(k), paths.frame(k + s));
                    a.chunks(d)
                        .zip(b.chunks(d))
                        .map(|(x, y)| {
                            let sq: f64 = x.iter().zip(y).map(|(p, q)| (q - p) * (q - p)).sum();
                            sq.sqrt().powf(q)
                        })
                        .sum::<f64>()
                })
                .collect::<Vec<_>>()
                .iter()
                .sum();
            let samples = starts * paths.len();
            Ok(IncrementStat {
                lag,
                mean: total / samples as f64,
                samples,
            })
        })
        .collect()
}

/// Least-squares slope of `log mean` against `log lag`.
pub fn loglog_slope(stats: &[IncrementStat]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = stats
        .iter()
        .filter(|s| s.mean > 0.0)
        .map(|s| (s.lag.ln(), s.mean.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::param("stats", "need two lags with positive means"));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::param("lags", "need two distinct lags"));
    }
    Ok(sxy / sxx)
}

/// `max_k mean_i |X_i(t_k)|^r`.
pub fn sup_moment(paths: &PathEnsemble, r: f64) -> f64 {
    let d = paths.dim();
    (0..paths.grid().len())
        .map(|k| {
            let frame = paths.frame(k);
            frame
                .chunks(d)
                .map(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt().powf(r))
                .sum::<f64>()
                / paths.len() as f64
        })
        .fold(0.0, f64::max)
}
