//! The staged construction: a run is a product of phase matrices
//! `A'_1 T_1 B_1 B'_1 A_2 A'_2 T_2 B_2 B'_2 ...` whose simplices shrink onto a
//! two-dimensional cell instead of a point.

mod avoid;
mod checks;
mod phases;
mod run;
mod schedule;

pub use avoid::{avoiding_path, face_first_coordinate_at_least_half, hyperplane_avoiding_path, AvoidError, AvoidingPath};
pub use checks::{
    check_angle_monotonicity, check_condition_double_star, check_conditions_star, check_size_recursions,
    first_block_ratio, restriction_columns_invariant, DoubleStarReport, MonotoneReport, SizeReport, StarReport,
};
pub use phases::{
    column_ratio, connector_path, freedom_rhs_path, gen_freedom_lhs, gen_freedom_rhs, gen_restriction_lhs,
    gen_restriction_rhs, gen_transition, restriction_rhs_path, sample_restriction_count, validate, GeneratorConfig,
    MoveRun, Phase, PhaseContext, PhaseError, PhasePath,
};
pub use run::{
    exact_angle, generate_stage, nested, run_construction, span_angle, ClusterAngles, ConstructionConfig, ConstructionError,
    ConstructionRun, LimitCell, StageStats, StageTrace,
};
pub use schedule::{
    make_schedule, ExponentMap, Interval, NormWindow, Poly, PowerTerm, Schedule, ScheduleError, StageExponents,
    StageWindows,
};
