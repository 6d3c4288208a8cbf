use nalgebra::DVector;
use num_rational::Rational64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fpp::{passage_times, Configuration, SeedPlan, TimeDistribution, LANE_COVER, LANE_QUOTIENT};
use crate::lattice::{CrystalLattice, Realization};
use crate::quotient::{build_quotient, KernelSublattice, QuotientData};

use super::common::{
    direction_denominator, direction_point, is_zero_direction, lattice_hash, mean_and_std_error, moment_gate, origin_vertex,
    run_batch, BatchOptions, Provenance,
};
use super::norm::EXACT_TOLERANCE;
use super::shape::{convex_hull, distance_to_polygon};
use super::time_constant::{estimate_time_constant, EstimateOptions, TimeConstantEstimate};

/// Estimate of the point-to-affine constant
/// `lim T(0, P^{-1}(n x1)) / n` on the covering lattice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffineEstimate {
    /// Direction in quotient lattice coordinates.
    pub quotient_direction: Vec<Rational64>,
    pub denominator: i64,
    pub k_max: u64,
    pub samples: Vec<f64>,
    pub point_estimate: f64,
    pub std_error: f64,
    pub provenance: Provenance,
}

/// `min T(v0, y) / (k_max N)` over covering-lattice vertices `y` realized on
/// `P^{-1}(P Φ(v0) + k_max N ρ1 c1)`, where `v0` is the vertex closest to the
/// origin and `c1` is a direction of the quotient.
pub fn estimate_point_to_affine(
    qdata: &QuotientData,
    distribution: &TimeDistribution,
    quotient_direction: &[Rational64],
    options: &EstimateOptions,
) -> Result<AffineEstimate> {
    let d1 = qdata.dim();
    if quotient_direction.len() != d1 {
        return Err(Error::DimensionMismatch { expected: d1, got: quotient_direction.len() });
    }
    if is_zero_direction(quotient_direction) {
        return Err(Error::InvalidArgument("quotient direction must be nonzero".into()));
    }
    let exact = distribution.is_degenerate();
    if options.batch.replicas == 0 || (options.batch.replicas < 2 && !exact) {
        return Err(Error::InvalidArgument("a random law needs at least 2 replicas".into()));
    }
    let (lattice, realization) = (&qdata.lattice, &qdata.realization);
    let gate = moment_gate(lattice, realization, distribution)?;
    let n = direction_denominator(quotient_direction);
    let k_max = i64::try_from(options.k_max).map_err(|_| Error::Overflow("k_max"))?;
    let step = DVector::from_vec(direction_point(&qdata.quotient_realization, quotient_direction)) * n as f64;
    let source = origin_vertex(realization);
    let source_point = realization.point(source.base, &source.index);
    let base_point = DVector::from_vec(qdata.project_point(&source_point));

    // the point of the farthest target set closest to the source
    let foot: Vec<f64> = source_point
        .iter()
        .zip(qdata.embed_point(step.as_slice()))
        .map(|(p, s)| p + s * k_max as f64)
        .collect();
    let foot_index = realization.lattice_coordinates(source.base, &foot);
    let core_lo: Vec<f64> = source.index.iter().zip(&foot_index).map(|(a, b)| (*a as f64).min(*b)).collect();
    let core_hi: Vec<f64> = source.index.iter().zip(&foot_index).map(|(a, b)| (*a as f64).max(*b)).collect();
    let snap = 0.5 * realization.min_spacing();
    let step_norm2 = step.norm_squared();

    let outcome = run_batch(lattice, realization, &core_lo, &core_hi, &options.batch, |window, replica| {
        let config = Configuration::sample(window, distribution, options.seed, replica);
        let s = window.lookup(source.base, &source.index).expect("source inside the core box");
        let res = passage_times(window, &config, s)?;
        let mut best: Vec<Option<(f64, bool)>> = vec![None; k_max as usize];
        for y in 0..window.vertex_count() {
            if window.in_margin(y, res.margin) {
                continue;
            }
            let w = DVector::from_vec(qdata.project_point(window.point(y))) - &base_point;
            let k = (w.dot(&step) / step_norm2).round();
            if k < 1.0 || k > k_max as f64 || (&w - &step * k).norm() > snap {
                continue;
            }
            let slot = &mut best[k as usize - 1];
            let cand = (res.times[y], res.boundary_touched[y]);
            if slot.is_none_or(|b| cand.0 < b.0 || (cand.0 == b.0 && b.1 && !cand.1)) {
                *slot = Some(cand);
            }
        }
        let (time, flagged) = best[k_max as usize - 1].ok_or(Error::EmptyAffineTarget)?;
        Ok((time, flagged))
    })?;

    let samples: Vec<f64> = outcome.results.iter().map(|t| t / (k_max * n) as f64).collect();
    let (point_estimate, std_error) = mean_and_std_error(&samples);
    Ok(AffineEstimate {
        quotient_direction: quotient_direction.to_vec(),
        denominator: n,
        k_max: options.k_max,
        samples,
        point_estimate,
        std_error: if exact { 0.0 } else { std_error },
        provenance: Provenance {
            lattice_hash: lattice_hash(lattice, realization),
            distribution: distribution.to_string(),
            base_seed: options.seed.base_seed,
            lanes: vec![options.seed.lane],
            k_max: Some(options.k_max),
            replicas: options.batch.replicas,
            windows: vec![outcome.window],
            boundary_flags: outcome.flagged,
            edge_connectivity: gate.edge_connectivity,
            moment_witness: gate.check.witness,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityOptions {
    pub k_max: u64,
    pub base_seed: u64,
    pub batch: BatchOptions,
    /// Slack in pooled standard errors.
    pub tol_std_errors: f64,
}

impl MonotonicityOptions {
    pub fn new(k_max: u64, replicas: u32, base_seed: u64) -> Self {
        Self { k_max, base_seed, batch: BatchOptions::new(replicas), tol_std_errors: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionVerdict {
    /// Direction in covering-lattice coordinates.
    pub direction: Vec<Rational64>,
    /// `q x`, the same direction in quotient coordinates.
    pub quotient_direction: Vec<Rational64>,
    /// `P ρ x`.
    pub projected_point: Vec<f64>,
    pub quotient: TimeConstantEstimate,
    pub affine: AffineEstimate,
    pub slack: f64,
    /// `μ̂_A <= μ̂_1 + slack`.
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolytopeCheck {
    /// Hull of `x1 / μ̂_1`.
    pub quotient_hull: Vec<[f64; 2]>,
    /// Hull of `x1 / μ̂_A`, an inner approximation of `P(B)`.
    pub projected_hull: Vec<[f64; 2]>,
    /// Largest distance of a quotient hull vertex outside the projected hull.
    pub max_violation: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub quotient_dim: usize,
    pub directions: Vec<DirectionVerdict>,
    pub polytope: Option<PolytopeCheck>,
    pub passed: bool,
    pub quotient_lattice_hash: String,
}

/// Compares `μ̂_1(x1)` on the quotient with the point-to-affine estimate
/// `μ̂_A(x1)` on the covering lattice for every direction. The two lattices
/// draw from independent lanes (`2j` and `2j + 1` for direction `j`).
pub fn monotonicity_experiment(
    lattice: &CrystalLattice,
    realization: &Realization,
    kernel: &KernelSublattice,
    distribution: &TimeDistribution,
    directions: &[Vec<Rational64>],
    options: &MonotonicityOptions,
) -> Result<MonotonicityReport> {
    let qd = build_quotient(lattice, realization, kernel)?;
    moment_gate(lattice, realization, distribution)?;
    moment_gate(&qd.quotient_lattice, &qd.quotient_realization, distribution)?;
    if directions.is_empty() {
        return Err(Error::InvalidArgument("no directions given".into()));
    }
    let mut verdicts = Vec::with_capacity(directions.len());
    for (j, c) in directions.iter().enumerate() {
        if c.len() != lattice.dim() {
            return Err(Error::DimensionMismatch { expected: lattice.dim(), got: c.len() });
        }
        let c1: Vec<Rational64> = (0..qd.dim())
            .map(|r| (0..lattice.dim()).map(|k| Rational64::from_integer(qd.q.get(r, k)) * c[k]).sum())
            .collect();
        if is_zero_direction(&c1) {
            return Err(Error::InvalidArgument(format!("direction {j} lies in the kernel")));
        }
        let lane = 2 * j as u32;
        let quotient = estimate_time_constant(
            &qd.quotient_lattice,
            &qd.quotient_realization,
            distribution,
            &c1,
            &EstimateOptions { k_max: options.k_max, seed: SeedPlan::new(options.base_seed, lane + LANE_QUOTIENT), batch: options.batch },
        )?;
        let affine = estimate_point_to_affine(
            &qd,
            distribution,
            &c1,
            &EstimateOptions { k_max: options.k_max, seed: SeedPlan::new(options.base_seed, lane + LANE_COVER), batch: options.batch },
        )?;
        let pooled = (quotient.std_error.powi(2) + affine.std_error.powi(2)).sqrt();
        let slack = options.tol_std_errors * pooled + EXACT_TOLERANCE;
        verdicts.push(DirectionVerdict {
            direction: c.clone(),
            projected_point: direction_point(&qd.quotient_realization, &c1),
            quotient_direction: c1,
            passed: affine.point_estimate <= quotient.point_estimate + slack,
            slack,
            quotient,
            affine,
        });
    }
    let polytope = (qd.dim() == 2).then(|| {
        let scaled = |mu: &dyn Fn(&DirectionVerdict) -> f64| {
            convex_hull(&verdicts.iter().map(|v| [v.projected_point[0] / mu(v), v.projected_point[1] / mu(v)]).collect::<Vec<_>>())
        };
        let quotient_hull = scaled(&|v| v.quotient.point_estimate);
        let projected_hull = scaled(&|v| v.affine.point_estimate);
        let max_violation = quotient_hull.iter().map(|&p| distance_to_polygon(p, &projected_hull)).fold(0.0f64, f64::max);
        PolytopeCheck { passed: max_violation <= EXACT_TOLERANCE, quotient_hull, projected_hull, max_violation }
    });
    let exact = distribution.is_degenerate();
    let passed = verdicts.iter().all(|v| v.passed) && polytope.as_ref().is_none_or(|p| p.passed || !exact);
    Ok(MonotonicityReport {
        quotient_dim: qd.dim(),
        directions: verdicts,
        polytope,
        passed,
        quotient_lattice_hash: lattice_hash(&qd.quotient_lattice, &qd.quotient_realization),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::parse_direction;
    use crate::lattice::build_preset;

    #[test]
    fn unit_times_on_the_diagonal_quotient_are_equal() {
        let (l, r) = build_preset("cubic2").unwrap();
        let k = KernelSublattice::from_columns(2, &[vec![1, -1]]).unwrap();
        let det = TimeDistribution::deterministic(1.0).unwrap();
        let report = monotonicity_experiment(&l, &r, &k, &det, &[parse_direction("1,1").unwrap()], &MonotonicityOptions::new(6, 1, 0)).unwrap();
        let v = &report.directions[0];
        assert_eq!(v.quotient.point_estimate, 2.0);
        assert_eq!(v.affine.point_estimate, 2.0);
        assert!(report.passed);
        assert!(report.polytope.is_none());
    }

    #[test]
    fn kernel_directions_are_rejected() {
        let (l, r) = build_preset("cubic2").unwrap();
        let k = KernelSublattice::from_columns(2, &[vec![1, -1]]).unwrap();
        let det = TimeDistribution::deterministic(1.0).unwrap();
        assert!(monotonicity_experiment(&l, &r, &k, &det, &[parse_direction("1,-1").unwrap()], &MonotonicityOptions::new(3, 1, 0)).is_err());
    }
}
