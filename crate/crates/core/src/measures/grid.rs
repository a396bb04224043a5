use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform partition `t_k = k T / n` of `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct TimeGrid {
    horizon: f64,
    intervals: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    horizon: f64,
    intervals: usize,
}

impl TryFrom<RawGrid> for TimeGrid {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        TimeGrid::new(raw.horizon, raw.intervals)
    }
}

impl TimeGrid {
    pub fn new(horizon: f64, intervals: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::param("horizon", "must be finite and positive"));
        }
        if intervals == 0 {
            return Err(Error::param("intervals", "must be at least 1"));
        }
        Ok(TimeGrid { horizon, intervals })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.intervals as f64
    }

    /// Grid point `t_k`; `t_n` is exactly the horizon.
    pub fn point(&self, k: usize) -> f64 {
        debug_assert!(k <= self.intervals);
        if k == self.intervals {
            self.horizon
        } else {
            k as f64 * self.horizon / self.intervals as f64
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.intervals).map(move |k| self.point(k))
    }

    /// Index `k` with `t` in `(t_k, t_{k+1}]`, i.e. the left endpoint used by the
    /// frozen-measure construction. `t = 0` maps to 0.
    pub fn left_index(&self, t: f64) -> usize {
        if t <= 0.0 {
            return 0;
        }
        let k = (t / self.step()).ceil() as usize;
        k.saturating_sub(1).min(self.intervals - 1)
    }

    /// Grid with `factor` times as many intervals over the same horizon.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::param("factor", "must be at least 1"));
        }
        TimeGrid::new(self.horizon, self.intervals * factor)
    }

    /// Number of fine intervals per interval of `coarse`, if `self` refines it.
    pub fn refinement_of(&self, coarse: &TimeGrid) -> Option<usize> {
        if self.horizon != coarse.horizon || self.intervals % coarse.intervals != 0 {
            return None;
        }
        Some(self.intervals / coarse.intervals)
    }

    pub(crate) fn ensure_same(&self, other: &TimeGrid, what: &str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{what}: (T = {}, n = {}) vs (T = {}, n = {})",
                self.horizon, self.intervals, other.horizon, other.intervals
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_are_exact() {
        let grid = TimeGrid::new(0.7, 3).unwrap();
        assert_eq!(grid.point(0), 0.0);
        assert_eq!(grid.point(3), 0.7);
        let pts: Vec<f64> = grid.points().collect();
        assert!(pts.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn left_index_matches_chi() {
        let grid = TimeGrid::new(1.0, 4).unwrap();
        assert_eq!(grid.left_index(0.0), 0);
        assert_eq!(grid.left_index(0.25), 0);
        assert_eq!(grid.left_index(0.26), 1);
        assert_eq!(grid.left_index(1.0), 3);
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(TimeGrid::new(0.0, 10).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
        assert!(TimeGrid::new(f64::NAN, 1).is_err());
    }

    #[test]
    fn refinement_detection() {
        let coarse = TimeGrid::new(1.0, 8).unwrap();
        let fine = coarse.refine(4).unwrap();
        assert_eq!(fine.refinement_of(&coarse), Some(4));
        assert_eq!(coarse.refinement_of(&fine), None);
    }
}
