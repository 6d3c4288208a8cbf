//! Time constants, limit shapes and experimental checks of the comparison
//! between a crystal lattice and its quotients.

mod common;
mod lifting;
mod monotonicity;
mod norm;
mod positivity;
mod shape;
mod time_constant;

pub use common::{
    direction_denominator, direction_point, format_direction, lattice_hash, mean_and_std_error, moment_gate, origin_vertex,
    parse_direction, rationalize, scaled_step, to_f64, BatchOptions, Direction, MomentGate, Provenance,
};
pub use lifting::{lifting_inequality_check, LiftingMode, LiftingOptions, LiftingReport, LiftingRow, DEFAULT_PATH_CAP};
pub use monotonicity::{
    estimate_point_to_affine, monotonicity_experiment, AffineEstimate, DirectionVerdict, MonotonicityOptions, MonotonicityReport,
    PolytopeCheck,
};
pub use norm::{norm_property_report, NormCheck, NormRelation, NormReport, EXACT_TOLERANCE};
pub use positivity::{positivity_scan, PositivityOptions, PositivityReport, PositivityRow};
pub use shape::{
    convex_hull, direction_grid, distance_to_polygon, estimate_shape, hausdorff_convex, RadialPoint, ShapeEstimate, ShapeOptions,
    ShapeRegime,
};
pub use time_constant::{estimate_time_constant, EstimateOptions, TimeConstantEstimate, TraceEntry};
