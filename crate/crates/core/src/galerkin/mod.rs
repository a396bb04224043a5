//! Spectral Galerkin solver for the mean-field stochastic porous-media
//! equation on `(0, 1)` with Dirichlet conditions.
//!
//! The state space `H` is the dual of `D(sqrt(-L))`, so `||u||_H^2` weights
//! mode `k` by `1 / lambda_k`. Noise is diagonal in the sine basis.

mod basis;
mod solver;

pub use basis::{eigenvalue, psi_scalar, SineBasis};
pub use solver::{
    energy_report, psi_apply, spde_solve, EnergyReport, FieldEnergy, FieldInit, SpdeConfig, SpdeRun,
    SpectralField,
};
