//! Edge-time laws, sampled configurations and first-passage times on windows.

mod config;
mod distribution;
mod passage;

pub use config::{sample_configuration, Configuration, SeedPlan, LANE_COVER, LANE_QUOTIENT};
pub use distribution::{moment_check, MomentCheck, TimeDistribution};
pub use passage::{
    passage_between_points, passage_times, passage_times_with_margin, passage_to_affine, passage_to_affine_from,
    percolation_region, restricted_passage, AffineSubspace, PassageResult, PointPassage, DEFAULT_MARGIN,
};
