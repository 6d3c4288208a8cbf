use std::f64::consts::PI;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fpp::{SeedPlan, TimeDistribution};
use crate::lattice::{CrystalLattice, Realization};

use super::common::{direction_point, moment_gate, rationalize, BatchOptions, Provenance};
use super::time_constant::{estimate_time_constant, EstimateOptions, TimeConstantEstimate};

/// Two-sided normal quantile used for radial confidence intervals.
const Z95: f64 = 1.959_963_984_540_054;

/// Counter-clockwise convex hull without collinear points (monotone chain).
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = points.iter().copied().filter(|p| p[0].is_finite() && p[1].is_finite()).collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let scale = pts.iter().fold(0.0f64, |m, p| m.max(p[0].abs()).max(p[1].abs())).max(1.0);
    let eps = 1e-12 * scale * scale;
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= eps {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 == 0.0 { 0.0 } else { ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0) };
    let q = [a[0] + t * ab[0] - p[0], a[1] + t * ab[1] - p[1]];
    q[0].hypot(q[1])
}

/// Distance from `p` to the filled convex polygon (counter-clockwise);
/// zero inside.
pub fn distance_to_polygon(p: [f64; 2], polygon: &[[f64; 2]]) -> f64 {
    match polygon.len() {
        0 => f64::INFINITY,
        1 => (p[0] - polygon[0][0]).hypot(p[1] - polygon[0][1]),
        n => {
            let inside = n >= 3
                && (0..n).all(|i| {
                    let (a, b) = (polygon[i], polygon[(i + 1) % n]);
                    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= 0.0
                });
            if inside {
                0.0
            } else {
                (0..n).map(|i| segment_distance(p, polygon[i], polygon[(i + 1) % n])).fold(f64::INFINITY, f64::min)
            }
        }
    }
}

/// Hausdorff distance between two filled convex polygons.
pub fn hausdorff_convex(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    let one = |x: &[[f64; 2]], y: &[[f64; 2]]| x.iter().map(|&p| distance_to_polygon(p, y)).fold(0.0f64, f64::max);
    one(a, b).max(one(b, a))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeOptions {
    pub n_dirs: usize,
    pub k_max: u64,
    pub seed: SeedPlan,
    pub batch: BatchOptions,
    /// Largest denominator used when rationalizing grid directions.
    pub max_denominator: i64,
    /// All `μ̂` below this means the unbounded-shape regime.
    pub zero_threshold: f64,
}

impl ShapeOptions {
    pub fn new(n_dirs: usize, k_max: u64, replicas: u32, seed: SeedPlan) -> Self {
        Self { n_dirs, k_max, seed, batch: BatchOptions::new(replicas), max_denominator: 4, zero_threshold: 0.02 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialPoint {
    /// Angle of the grid direction that was rationalized (2-d only).
    pub angle: Option<f64>,
    pub direction: Vec<Rational64>,
    /// `ρ x`.
    pub point: Vec<f64>,
    pub mu: f64,
    pub mu_std_error: f64,
    /// `|ρ x| / μ̂` with a 95% interval; `None` stands for an infinite value.
    pub radius: Option<f64>,
    pub radius_lo: f64,
    pub radius_hi: Option<f64>,
    /// `ρ x / μ̂`, `None` when `μ̂ = 0`.
    pub boundary_point: Option<Vec<f64>>,
    /// Per-replica values behind `μ̂`.
    pub samples: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ShapeRegime {
    Bounded,
    /// Every `μ̂` is below the threshold: the shape is all of space.
    Unbounded { threshold: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeEstimate {
    pub dim: usize,
    pub radial: Vec<RadialPoint>,
    /// Counter-clockwise hull of the boundary points (2-d, bounded regime).
    pub polytope: Option<Vec<[f64; 2]>>,
    pub regime: ShapeRegime,
    pub provenance: Provenance,
}

impl ShapeEstimate {
    /// A shape from given radial points, e.g. for rendering a reference.
    ///
    /// There is no hull when some `μ̂` is exactly zero, since the shape is
    /// then unbounded in that direction.
    pub fn from_radial(radial: Vec<RadialPoint>, dim: usize, zero_threshold: f64, provenance: Provenance) -> Self {
        let unbounded = !radial.is_empty() && radial.iter().all(|r| r.mu < zero_threshold);
        let regime = if unbounded { ShapeRegime::Unbounded { threshold: zero_threshold } } else { ShapeRegime::Bounded };
        let polytope = if dim == 2 && !unbounded {
            let points: Option<Vec<[f64; 2]>> = radial.iter().map(|r| r.boundary_point.as_ref().map(|b| [b[0], b[1]])).collect();
            points.map(|p| convex_hull(&p))
        } else {
            None
        };
        Self { dim, radial, polytope, regime, provenance }
    }
}

/// Grid directions: angles `2πj/n` in the plane, `±1` on the line, and a
/// Fibonacci sphere in higher dimensions.
pub fn direction_grid(dim: usize, n: usize) -> Vec<(Option<f64>, Vec<f64>)> {
    match dim {
        1 => vec![(None, vec![1.0]), (None, vec![-1.0])],
        2 => (0..n)
            .map(|j| {
                let theta = 2.0 * PI * j as f64 / n as f64;
                (Some(theta), vec![theta.cos(), theta.sin()])
            })
            .collect(),
        _ => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|j| {
                    let y = 1.0 - 2.0 * (j as f64 + 0.5) / n as f64;
                    let r = (1.0 - y * y).sqrt();
                    let phi = golden * j as f64;
                    let mut v = vec![r * phi.cos(), y, r * phi.sin()];
                    v.resize(dim, 0.0);
                    (None, v)
                })
                .collect()
        }
    }
}

pub(crate) fn radial_point(angle: Option<f64>, realization: &Realization, est: &TimeConstantEstimate) -> RadialPoint {
    let point = direction_point(realization, &est.direction);
    let norm = point.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mu = est.point_estimate;
    let half = Z95 * est.std_error;
    let radius = (mu > 0.0).then(|| norm / mu);
    let radius_lo = norm / (mu + half);
    let radius_hi = (mu - half > 0.0).then(|| norm / (mu - half));
    RadialPoint {
        angle,
        direction: est.direction.clone(),
        boundary_point: (mu > 0.0).then(|| point.iter().map(|x| x / mu).collect()),
        samples: est.samples.clone(),
        point,
        mu,
        mu_std_error: est.std_error,
        radius,
        radius_lo,
        radius_hi,
    }
}

/// Estimates the unit ball `{μ <= 1}` from radial points `ρ x / μ̂(x)` over
/// a grid of rationalized directions.
pub fn estimate_shape(
    lattice: &CrystalLattice,
    realization: &Realization,
    distribution: &TimeDistribution,
    options: &ShapeOptions,
) -> Result<ShapeEstimate> {
    if options.n_dirs == 0 {
        return Err(Error::InvalidArgument("shape estimation needs at least one direction".into()));
    }
    let gate = moment_gate(lattice, realization, distribution)?;
    let d = lattice.dim();
    let mut radial = Vec::new();
    let mut windows = Vec::new();
    let mut lanes = Vec::new();
    let mut flags = 0;
    for (j, (angle, u)) in direction_grid(d, options.n_dirs).into_iter().enumerate() {
        let direction = rationalize(realization, &u, options.max_denominator)?;
        let seed = options.seed.with_lane(options.seed.lane + j as u32);
        let est = estimate_time_constant(
            lattice,
            realization,
            distribution,
            &direction,
            &EstimateOptions { k_max: options.k_max, seed, batch: options.batch },
        )?;
        windows.extend(est.provenance.windows.iter().cloned());
        flags += est.provenance.boundary_flags;
        lanes.push(seed.lane);
        radial.push(radial_point(angle, realization, &est));
    }
    let provenance = Provenance {
        lattice_hash: super::common::lattice_hash(lattice, realization),
        distribution: distribution.to_string(),
        base_seed: options.seed.base_seed,
        lanes,
        k_max: Some(options.k_max),
        replicas: options.batch.replicas,
        windows,
        boundary_flags: flags,
        edge_connectivity: gate.edge_connectivity,
        moment_witness: gate.check.witness,
    };
    Ok(ShapeEstimate::from_radial(radial, d, options.zero_threshold, provenance))
}
