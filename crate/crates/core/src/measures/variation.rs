//! Weighted variation distance `||mu - nu||_{2,var}`.
//!
//! The supremum runs over test functions with `|f| <= 1 + |.|^2`. For discrete
//! measures it is attained by `f = sign(mu - nu) (1 + |.|^2)` on the joint
//! support, which gives the atom-sum formula used here. The one-sided reading
//! `f <= 1 + |.|^2` would make the supremum infinite.

use std::collections::BTreeMap;

use super::ensemble::{norm_sq, ParticleEnsemble};
use crate::error::{Error, Result};

/// One atom of the joint support with the mass each measure puts on it.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportAtom {
    pub point: Vec<f64>,
    pub mu_mass: f64,
    pub nu_mass: f64,
}

fn key(x: &[f64]) -> Vec<u64> {
    // -0.0 and 0.0 are the same point.
    x.iter().map(|v| (v + 0.0).to_bits()).collect()
}

/// Distinct atoms of `mu` and `nu`, with coincident states merged exactly.
pub fn joint_support(mu: &ParticleEnsemble, nu: &ParticleEnsemble) -> Result<Vec<SupportAtom>> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            found: nu.dim(),
        });
    }
    let mut table: BTreeMap<Vec<u64>, SupportAtom> = BTreeMap::new();
    for (w, x) in mu.atoms() {
        table
            .entry(key(x))
            .or_insert_with(|| SupportAtom {
                point: x.to_vec(),
                mu_mass: 0.0,
                nu_mass: 0.0,
            })
            .mu_mass += w;
    }
    for (w, x) in nu.atoms() {
        table
            .entry(key(x))
            .or_insert_with(|| SupportAtom {
                point: x.to_vec(),
                mu_mass: 0.0,
                nu_mass: 0.0,
            })
            .nu_mass += w;
    }
    Ok(table.into_values().collect())
}

/// `sum_z (1 + |z|^2) |mu({z}) - nu({z})|` over the joint support.
pub fn weighted_variation_2(mu: &ParticleEnsemble, nu: &ParticleEnsemble) -> Result<f64> {
    Ok(joint_support(mu, nu)?
        .iter()
        .map(|a| (1.0 + norm_sq(&a.point)) * (a.mu_mass - a.nu_mass).abs())
        .sum())
}
