use num_rational::Rational64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fpp::{SeedPlan, TimeDistribution};
use crate::lattice::{CrystalLattice, Realization};

use super::common::BatchOptions;
use super::norm::EXACT_TOLERANCE;
use super::time_constant::{estimate_time_constant, EstimateOptions, TimeConstantEstimate};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositivityOptions {
    pub k_max: u64,
    pub base_seed: u64,
    pub batch: BatchOptions,
    pub tol_std_errors: f64,
    /// Estimates below this count as indistinguishable from zero.
    pub zero_threshold: f64,
}

impl PositivityOptions {
    pub fn new(k_max: u64, replicas: u32, base_seed: u64) -> Self {
        Self { k_max, base_seed, batch: BatchOptions::new(replicas), tol_std_errors: 3.0, zero_threshold: 0.02 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivityRow {
    /// Probability of a zero edge time.
    pub p: f64,
    pub estimate: TimeConstantEstimate,
    /// Whether `μ̂` exceeds the previous row by more than the slack.
    pub increase: bool,
    pub near_zero: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivityReport {
    pub rows: Vec<PositivityRow>,
    /// `μ̂` is nonincreasing in `p` within the slack.
    pub nonincreasing: bool,
    /// The `p` values whose estimate is below the zero threshold.
    pub zero_range: Vec<f64>,
    pub zero_threshold: f64,
    pub passed: bool,
}

/// `μ̂(x)` under `bernoulli(p)` for every `p` in `p_grid` (sorted ascending),
/// lane `i` for the `i`th value.
pub fn positivity_scan(
    lattice: &CrystalLattice,
    realization: &Realization,
    p_grid: &[f64],
    direction: &[Rational64],
    options: &PositivityOptions,
) -> Result<PositivityReport> {
    if p_grid.is_empty() {
        return Err(Error::InvalidArgument("p grid is empty".into()));
    }
    let mut grid = p_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let mut rows: Vec<PositivityRow> = Vec::with_capacity(grid.len());
    for (i, &p) in grid.iter().enumerate() {
        let dist = TimeDistribution::bernoulli(p)?;
        let opts = EstimateOptions { k_max: options.k_max, seed: SeedPlan::new(options.base_seed, i as u32), batch: options.batch };
        let estimate = estimate_time_constant(lattice, realization, &dist, direction, &opts)?;
        let increase = rows.last().is_some_and(|prev| {
            let pooled = (prev.estimate.std_error.powi(2) + estimate.std_error.powi(2)).sqrt();
            estimate.point_estimate > prev.estimate.point_estimate + options.tol_std_errors * pooled + EXACT_TOLERANCE
        });
        let near_zero = estimate.point_estimate < options.zero_threshold;
        rows.push(PositivityRow { p, estimate, increase, near_zero });
    }
    let nonincreasing = rows.iter().all(|r| !r.increase);
    Ok(PositivityReport {
        zero_range: rows.iter().filter(|r| r.near_zero).map(|r| r.p).collect(),
        rows,
        nonincreasing,
        zero_threshold: options.zero_threshold,
        passed: nonincreasing,
    })
}
