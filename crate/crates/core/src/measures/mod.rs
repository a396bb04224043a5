//! Empirical measures, path ensembles and the distances between them.

mod assignment;
pub mod dump;
mod ensemble;
mod grid;
mod paths;
mod transport;
mod variation;

pub use assignment::min_cost_assignment;
pub use ensemble::ParticleEnsemble;
pub use grid::TimeGrid;
pub use paths::{local_path_w2, MeasureFlow, Path, PathEnsemble};
pub use transport::{
    wasserstein_assignment, wasserstein_p, wasserstein_quantile, DEFAULT_ASSIGNMENT_CAP,
};
pub use variation::{joint_support, weighted_variation_2, SupportAtom};

pub(crate) use ensemble::{norm, norm_sq};
