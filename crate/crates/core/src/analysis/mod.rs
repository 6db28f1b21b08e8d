//! Measurements on top of the exact core: Monte Carlo checks, Birkhoff
//! averages, nested polygon families and dimension estimates.

mod dimension;
mod ergodic;
mod montecarlo;
mod nested;
mod report;
mod shadow;

use thiserror::Error;

pub use dimension::{
    ball_mass_scan, box_dimension, cantor_intervals, frostman_measure, frostman_weights, geometric_grid,
    BallMassReport, BallScanConfig, BoxSet, DimensionFit, FrostmanMeasure, NestedFamily, NestedPolygon,
};
pub use ergodic::{
    birkhoff_average, birkhoff_averages, golden_control, keane_check, two_measure_evidence, BirkhoffConfig, ClusterAverages,
    KeaneCollision, Observable, SeparationReport,
};
pub use montecarlo::{
    mc_balance, mc_jacobian_pushforward, prob_decay_sim, BalanceConfig, BalanceReport, DecayConfig, DecayReport,
    Dependence,
};
pub use nested::{
    build_nested_family, inset_distance, run_plane_family, simplex_tree, NestedConfig, NestedReport, PlaneReport,
    SimplexTree, TreeNode,
};
pub use report::{fit_line, mean_stderr, pairwise_sum, Claim, LineFit, McReport, Verdict, Z95, Z95_ONE_SIDED};
pub use shadow::{illumination_fraction, illumination_proportion, survival_proportion, ShadowConfig};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Perm(#[from] crate::perm::PermError),
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
    #[error(transparent)]
    Construction(#[from] crate::construction::ConstructionError),
    #[error(transparent)]
    Symplectic(#[from] crate::symplectic::SymplecticError),
    #[error(transparent)]
    Induction(#[from] crate::induction::InductionError),
}
