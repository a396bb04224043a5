//! Zero-noise limit, skeleton equation, control energies and Monte-Carlo
//! small-noise experiments.
//!
//! The skeleton equation is driven with the point mass at the zero-noise
//! limit as its measure argument, never with the law of the controlled path.

mod control;
mod experiment;
mod ode;

pub use control::{rate_function_hit_level, rate_of_control, Control};
pub use experiment::{
    small_noise_experiment, Event, RateEstimate, RateRow, SmallNoiseExperiment, MIN_TRIALS,
};
pub use ode::{control_convergence_probe, limit_ode, skeleton_solve, ConvergenceRow};
