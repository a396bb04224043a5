//! Particle, Galerkin and small-noise solvers for McKean-Vlasov equations.

pub mod error;
pub mod galerkin;
pub mod ldp;
pub mod measures;
pub mod models;
pub mod rng;
pub mod solvers;

pub use error::{BlowUpSite, Error, Result};
