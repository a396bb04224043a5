//! `L^p`-Wasserstein distance between empirical measures.
//!
//! Two exact backends: the sorted quantile coupling in one dimension, and a
//! minimum-cost assignment for equal-size uniform ensembles in any dimension.

use rayon::prelude::*;

use super::assignment::min_cost_assignment;
use super::ensemble::ParticleEnsemble;
use crate::error::{Error, Result};

/// Largest ensemble the assignment backend accepts by default. Callers with
/// bigger ensembles subsample explicitly.
pub const DEFAULT_ASSIGNMENT_CAP: usize = 2048;

fn check_pair(mu: &ParticleEnsemble, nu: &ParticleEnsemble, p: f64) -> Result<()> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            found: nu.dim(),
        });
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::param("p", "Wasserstein order must be >= 1"));
    }
    Ok(())
}

/// `W_p(mu, nu)`: quantile coupling when `d = 1`, assignment otherwise.
pub fn wasserstein_p(mu: &ParticleEnsemble, nu: &ParticleEnsemble, p: f64) -> Result<f64> {
    check_pair(mu, nu, p)?;
    if mu.dim() == 1 {
        wasserstein_quantile(mu, nu, p)
    } else {
        wasserstein_assignment(mu, nu, p, DEFAULT_ASSIGNMENT_CAP)
    }
}

/// One-dimensional `W_p` through the monotone (quantile) coupling. Accepts
/// arbitrary weights and sizes.
pub fn wasserstein_quantile(mu: &ParticleEnsemble, nu: &ParticleEnsemble, p: f64) -> Result<f64> {
    check_pair(mu, nu, p)?;
    if mu.dim() != 1 {
        return Err(Error::Unsupported(format!(
            "quantile coupling needs d = 1, got d = {}",
            mu.dim()
        )));
    }
    let xs = sorted_atoms(mu);
    let ys = sorted_atoms(nu);

    let cost = if mu.is_uniform() && nu.is_uniform() && xs.len() == ys.len() {
        let total: f64 = xs
            .iter()
            .zip(&ys)
            .map(|((x, _), (y, _))| (x - y).abs().powf(p))
            .sum();
        total / xs.len() as f64
    } else {
        let mut total = 0.0;
        let (mut i, mut j) = (0usize, 0usize);
        let (mut rem_x, mut rem_y) = (xs[0].1, ys[0].1);
        while i < xs.len() && j < ys.len() {
            let mass = rem_x.min(rem_y);
            total += mass * (xs[i].0 - ys[j].0).abs().powf(p);
            rem_x -= mass;
            rem_y -= mass;
            // Round-off in the cumulative masses is absorbed by the tolerance.
            if rem_x <= 1e-15 {
                i += 1;
                if i < xs.len() {
                    rem_x = xs[i].1;
                }
            }
            if rem_y <= 1e-15 {
                j += 1;
                if j < ys.len() {
                    rem_y = ys[j].1;
                }
            }
        }
        total
    };
    Ok(cost.powf(1.0 / p))
}

fn sorted_atoms(e: &ParticleEnsemble) -> Vec<(f64, f64)> {
    let mut atoms: Vec<(f64, f64)> = e.atoms().map(|(w, x)| (x[0], w)).collect();
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    atoms
}

/// `W_p` for equal-size uniform ensembles via exact minimum-cost matching.
/// `max_size` bounds the `O(M^3)` solve; larger inputs are rejected.
pub fn wasserstein_assignment(
    mu: &ParticleEnsemble,
    nu: &ParticleEnsemble,
    p: f64,
    max_size: usize,
) -> Result<f64> {
    check_pair(mu, nu, p)?;
    if mu.len() != nu.len() || !mu.is_uniform() || !nu.is_uniform() {
        return Err(Error::Unsupported(
            "assignment backend needs equal sizes and uniform weights".into(),
        ));
    }
    let n = mu.len();
    if n > max_size {
        return Err(Error::Unsupported(format!(
            "ensemble size {n} exceeds assignment cap {max_size}; subsample first"
        )));
    }
    let cost: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (r, c) = (idx / n, idx % n);
            let sq: f64 = mu
                .state(r)
                .iter()
                .zip(nu.state(c))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            sq.sqrt().powf(p)
        })
        .collect();
    let (_, total) = min_cost_assignment(&cost, n);
    Ok((total / n as f64).max(0.0).powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(values: &[f64]) -> ParticleEnsemble {
        ParticleEnsemble::uniform(1, values.to_vec()).unwrap()
    }

    #[test]
    fn identical_ensembles_are_at_distance_zero() {
        let mu = uniform(&[0.3, -1.0, 2.5]);
        let shuffled = uniform(&[2.5, 0.3, -1.0]);
        assert_eq!(wasserstein_p(&mu, &shuffled, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn diracs_are_forced_coupling() {
        let a = uniform(&[0.0]);
        let b = uniform(&[1.0]);
        assert_eq!(wasserstein_p(&a, &b, 2.0).unwrap(), 1.0);
        assert_eq!(wasserstein_p(&a, &b, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn weighted_quantile_coupling() {
        // mu = 1/2 d0 + 1/2 d1, nu = d0: W_1 = 1/2, W_2 = sqrt(1/2).
        let mu = uniform(&[0.0, 1.0]);
        let nu = uniform(&[0.0]);
        assert!((wasserstein_p(&mu, &nu, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((wasserstein_p(&mu, &nu, 2.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        let w = ParticleEnsemble::weighted(1, vec![0.0, 4.0], vec![3.0, 1.0]).unwrap();
        // Move mass 1/4 from 4 to 0 (after matching against d0).
        assert!((wasserstein_p(&w, &nu, 1.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn backends_agree_in_one_dimension() {
        let mu = uniform(&[0.1, 3.0, -2.0, 0.7]);
        let nu = uniform(&[1.0, 1.5, -0.4, 2.2]);
        for p in [1.0, 1.5, 2.0, 3.0] {
            let q = wasserstein_quantile(&mu, &nu, p).unwrap();
            let a = wasserstein_assignment(&mu, &nu, p, 16).unwrap();
            assert!((q - a).abs() < 1e-12);
        }
    }

    #[test]
    fn contract_errors() {
        let a = uniform(&[0.0, 1.0]);
        let b2 = ParticleEnsemble::uniform(2, vec![0.0, 0.0]).unwrap();
        assert!(matches!(wasserstein_p(&a, &b2, 2.0), Err(Error::DimensionMismatch { .. })));
        assert!(wasserstein_p(&a, &a, 0.5).is_err());
        let c = ParticleEnsemble::uniform(2, vec![0.0, 0.0, 1.0, 1.0, 2.0, 2.0]).unwrap();
        assert!(matches!(wasserstein_p(&b2, &c, 2.0), Err(Error::Unsupported(_))));
        let w = ParticleEnsemble::weighted(2, vec![0.0; 4], vec![1.0, 3.0]).unwrap();
        let u = ParticleEnsemble::uniform(2, vec![0.0; 4]).unwrap();
        assert!(matches!(wasserstein_p(&w, &u, 2.0), Err(Error::Unsupported(_))));
        assert!(wasserstein_assignment(&a, &a, 2.0, 1).is_err());
    }

    #[test]
    fn two_dimensional_shift() {
        let mu = ParticleEnsemble::uniform(2, vec![0.0, 0.0, 1.0, 0.0]).unwrap();
        let nu = ParticleEnsemble::uniform(2, vec![1.0, 1.0, 0.0, 1.0]).unwrap();
        assert!((wasserstein_p(&mu, &nu, 2.0).unwrap() - 1.0).abs() < 1e-15);
    }
}
