use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};

/// `|s|^{r-1} s`.
#[inline]
pub fn psi_scalar(s: f64, r: f64) -> f64 {
    s.abs().powf(r - 1.0) * s
}

/// Eigenvalue `(k pi)^2` of `-d^2/dx^2` on `(0, 1)` with Dirichlet
/// conditions; `k` starts at 1.
pub fn eigenvalue(k: usize) -> f64 {
    let a = k as f64 * PI;
    a * a
}

/// Orthonormal sine modes `e_k = sqrt(2) sin(k pi x)` on `(0, 1)` together
/// with the interior grid `x_j = j / (P + 1)` used for pointwise maps.
///
/// With `P >= K` the discrete transform is a scaled DST-I, so
/// `forward(inverse(u)) = u` up to rounding.
#[derive(Debug, Clone)]
pub struct SineBasis {
    modes: usize,
    points: usize,
    /// Row-major `P x K` values of `e_k(x_j)`.
    table: Vec<f64>,
}

impl SineBasis {
    pub fn new(modes: usize, points: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::param("modes", "must be at least 1"));
        }
        if points < modes {
            return Err(Error::param("points", "need at least as many points as modes"));
        }
        let mut table = Vec::with_capacity(points * modes);
        let n1 = (points + 1) as f64;
        for j in 1..=points {
            for k in 1..=modes {
                // Reduce the argument exactly before scaling by pi.
                let phase = ((j * k) % (2 * (points + 1))) as f64 / n1;
                table.push(SQRT_2 * (PI * phase).sin());
            }
        }
        Ok(SineBasis {
            modes,
            points,
            table,
        })
    }

    /// Grid sized for the nonlinearity `|s|^{r-1} s`: `max(4K, 2 ceil(r) K)`.
    pub fn for_exponent(modes: usize, r: f64) -> Result<Self> {
        if !(r >= 1.0 && r.is_finite()) {
            return Err(Error::param("r", "must be finite and >= 1"));
        }
        let points = (4 * modes).max(2 * r.ceil() as usize * modes);
        SineBasis::new(modes, points)
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// Quadrature weight `1 / (P + 1)`.
    pub fn weight(&self) -> f64 {
        1.0 / (self.points + 1) as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        (j + 1) as f64 * self.weight()
    }

    /// Physical values `u(x_j)` from coefficients.
    pub fn inverse(&self, coeffs: &[f64], values: &mut [f64]) {
        for (v, row) in values.iter_mut().zip(self.table.chunks(self.modes)) {
            *v = row.iter().zip(coeffs).map(|(e, c)| e * c).sum();
        }
    }

    /// Coefficients from physical values by trapezoid quadrature.
    pub fn forward(&self, values: &[f64], coeffs: &mut [f64]) {
        coeffs.fill(0.0);
        for (v, row) in values.iter().zip(self.table.chunks(self.modes)) {
            for (c, e) in coeffs.iter_mut().zip(row) {
                *c += v * e;
            }
        }
        let w = self.weight();
        coeffs.iter_mut().for_each(|c| *c *= w);
    }

    /// Projection of `Psi(u)` onto the modes; `values` is scratch of length `P`.
    pub fn psi(&self, coeffs: &[f64], r: f64, values: &mut [f64], out: &mut [f64]) {
        self.inverse(coeffs, values);
        values.iter_mut().for_each(|v| *v = psi_scalar(*v, r));
        self.forward(values, out);
    }

    /// `int_0^1 |u|^p dx` by trapezoid quadrature.
    pub fn lp_integral(&self, coeffs: &[f64], p: f64, values: &mut [f64]) -> f64 {
        self.inverse(coeffs, values);
        self.weight() * values.iter().map(|v| v.abs().powf(p)).sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let basis = SineBasis::new(16, 64).unwrap();
        let coeffs: Vec<f64> = (1..=16).map(|k| (k as f64).sin() / k as f64).collect();
        let mut values = vec![0.0; 64];
        let mut back = vec![0.0; 16];
        basis.inverse(&coeffs, &mut values);
        basis.forward(&values, &mut back);
        for (a, b) in coeffs.iter().zip(&back) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn grid_rule() {
        assert_eq!(SineBasis::for_exponent(8, 2.0).unwrap().points(), 32);
        assert_eq!(SineBasis::for_exponent(8, 2.5).unwrap().points(), 48);
        assert!(SineBasis::new(8, 4).is_err());
        assert!(SineBasis::for_exponent(8, 0.5).is_err());
    }

    #[test]
    fn eigenvalues() {
        assert!((eigenvalue(1) - PI * PI).abs() < 1e-15);
        assert!((eigenvalue(3) - 9.0 * PI * PI).abs() < 1e-12);
    }
}
