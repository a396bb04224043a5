use crate::error::{Error, Result};
use crate::measures::TimeGrid;

/// Piecewise-constant control, one `m`-vector per grid interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Control {
    grid: TimeGrid,
    dim: usize,
    values: Vec<f64>,
    energy: f64,
}

fn energy_of(grid: &TimeGrid, values: &[f64]) -> f64 {
    0.5 * values.iter().map(|v| v * v).sum::<f64>() * grid.step()
}

impl Control {
    pub fn new(grid: TimeGrid, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || values.len() != grid.intervals() * dim {
            return Err(Error::param(
                "control",
                format!("expected {} values of dimension {dim}", grid.intervals() * dim),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("control", "values must be finite"));
        }
        let energy = energy_of(&grid, &values);
        Ok(Control {
            grid,
            dim,
            values,
            energy,
        })
    }

    pub fn zero(grid: TimeGrid, dim: usize) -> Self {
        Control {
            grid,
            dim,
            values: vec![0.0; grid.intervals() * dim],
            energy: 0.0,
        }
    }

    pub fn constant(grid: TimeGrid, value: &[f64]) -> Result<Self> {
        let values = value.iter().copied().cycle().take(grid.intervals() * value.len()).collect();
        Control::new(grid, value.len(), values)
    }

    /// Samples `f` at the left endpoint of every interval.
    pub fn from_fn(grid: TimeGrid, dim: usize, f: impl Fn(f64, &mut [f64])) -> Result<Self> {
        let mut values = vec![0.0; grid.intervals() * dim];
        for (k, chunk) in values.chunks_mut(dim).enumerate() {
            f(grid.point(k), chunk);
        }
        Control::new(grid, dim, values)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `1/2 int |phi|^2`, cached at construction.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    /// The same function on a grid refining this one.
    pub fn lift(&self, fine: &TimeGrid) -> Result<Control> {
        let factor = fine.refinement_of(&self.grid).ok_or_else(|| {
            Error::GridMismatch(format!(
                "{} intervals do not refine {}",
                fine.intervals(),
                self.grid.intervals()
            ))
        })?;
        let mut values = Vec::with_capacity(fine.intervals() * self.dim);
        for k in 0..self.grid.intervals() {
            for _ in 0..factor {
                values.extend_from_slice(self.value(k));
            }
        }
        Control::new(*fine, self.dim, values)
    }

    /// Approximation by `pieces` constant pieces, each taking the value at
    /// its left endpoint. `pieces` must divide the interval count.
    pub fn left_endpoint_approximation(&self, pieces: usize) -> Result<Control> {
        let coarse = TimeGrid::new(self.grid.horizon(), pieces)?;
        let factor = self.grid.refinement_of(&coarse).ok_or_else(|| {
            Error::GridMismatch(format!(
                "{pieces} pieces do not divide {} intervals",
                self.grid.intervals()
            ))
        })?;
        let values = (0..pieces)
            .flat_map(|k| self.value(k * factor).to_vec())
            .collect();
        Control::new(coarse, self.dim, values)
    }
}

/// Energy `1/2 int_0^T |phi|^2` of a control.
pub fn rate_of_control(control: &Control) -> f64 {
    control.energy()
}

/// Cheapest energy driving `x' = phi` from 0 to level `delta` by time `t`,
/// namely `delta^2 / (2 t)`.
pub fn rate_function_hit_level(delta: f64, horizon: f64) -> Result<f64> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::param("delta", "must be positive"));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::param("horizon", "must be positive"));
    }
    Ok(delta * delta / (2.0 * horizon))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> TimeGrid {
        TimeGrid::new(1.0, n).unwrap()
    }

    #[test]
    fn energy_examples() {
        assert_eq!(rate_of_control(&Control::zero(unit(10), 1)), 0.0);
        let one = Control::constant(unit(10), &[1.0]).unwrap();
        assert!((rate_of_control(&one) - 0.5).abs() < 1e-15);
        let pulse = Control::from_fn(unit(4), 1, |t, out| out[0] = if t < 0.25 { 2.0 } else { 0.0 }).unwrap();
        assert!((rate_of_control(&pulse) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn hit_level_examples() {
        assert_eq!(rate_function_hit_level(1.0, 1.0).unwrap(), 0.5);
        assert_eq!(rate_function_hit_level(0.5, 1.0).unwrap(), 0.125);
        assert!(rate_function_hit_level(1e-8, 1.0).unwrap() < 1e-15);
        assert!(rate_function_hit_level(0.0, 1.0).is_err());
        assert!(rate_function_hit_level(1.0, -1.0).is_err());
    }

    #[test]
    fn lift_and_coarsen() {
        let c = Control::from_fn(unit(4), 2, |t, out| {
            out[0] = t;
            out[1] = -t;
        })
        .unwrap();
        let fine = c.lift(&unit(12)).unwrap();
        assert_eq!(fine.value(5), c.value(1));
        assert!((fine.energy() - c.energy()).abs() < 1e-12);
        assert_eq!(fine.left_endpoint_approximation(4).unwrap(), c);
        assert!(c.lift(&unit(6)).is_err());
        assert!(c.left_endpoint_approximation(3).is_err());
    }
}
