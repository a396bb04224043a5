//! Particle solvers: the frozen-measure Euler scheme, the interacting
//! particle system and Euler-Maruyama against a prescribed measure flow.

mod config;
mod decoupled;
mod engine;
mod holder;

pub use config::{InitialCondition, InitialSampler, LawMode, RunMetadata, Scheme, SolverConfig};
pub use decoupled::{decoupled_solve, NoisePath};
pub use engine::{euler_frozen_measure, interacting_particles};
pub(crate) use engine::euler_update;
pub use holder::{holder_increment_stats, loglog_slope, sup_moment, IncrementStat};
