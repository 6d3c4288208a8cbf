use std::fmt::Write as _;

use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{CheckedMul, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fpp::{moment_check, MomentCheck, TimeDistribution};
use crate::lattice::{box_points, edge_connectivity_estimate, write_lattice, CrystalLattice, LatticeVertex, Realization, Window, WindowOptions};

/// A rational direction in lattice coordinates: the point is `ρ c`.
pub type Direction = Vec<Rational64>;

/// Parses `1,-1/2,0` into a direction.
pub fn parse_direction(s: &str) -> Result<Direction> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            let (num, den) = t.split_once('/').unwrap_or((t, "1"));
            let parse = |x: &str| x.trim().parse::<i64>().map_err(|_| Error::InvalidArgument(format!("bad rational `{t}` in `{s}`")));
            let den = parse(den)?;
            if den == 0 {
                return Err(Error::InvalidArgument(format!("zero denominator in `{s}`")));
            }
            Ok(Rational64::new(parse(num)?, den))
        })
        .collect()
}

pub fn format_direction(c: &[Rational64]) -> String {
    c.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Least `N >= 1` with `N c` integral.
pub fn direction_denominator(c: &[Rational64]) -> i64 {
    c.iter().fold(1i64, |acc, x| acc.lcm(x.denom()))
}

/// `n c`, which must be integral.
pub fn scaled_step(c: &[Rational64], n: i64) -> Result<Vec<i64>> {
    c.iter()
        .map(|x| {
            let y = x.checked_mul(&Rational64::from_integer(n)).ok_or(Error::Overflow("direction scaling"))?;
            if y.is_integer() {
                Ok(y.to_integer())
            } else {
                Err(Error::InvalidArgument(format!("{n} * {x} is not an integer")))
            }
        })
        .collect()
}

pub fn to_f64(x: &Rational64) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

/// `ρ c`.
pub fn direction_point(realization: &Realization, c: &[Rational64]) -> Vec<f64> {
    let rho = realization.period();
    (0..rho.nrows()).map(|r| (0..rho.ncols()).map(|k| rho[(r, k)] * to_f64(&c[k])).sum()).collect()
}

/// The rational direction `z / N` (`N <= max_denominator`) whose point `ρ z`
/// makes the smallest angle with `u`; ties go to the smaller `N`.
pub fn rationalize(realization: &Realization, u: &[f64], max_denominator: i64) -> Result<Direction> {
    let d = realization.dim();
    if u.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: u.len() });
    }
    let inv = realization.period().clone().try_inverse().expect("period checked nonsingular");
    let coords: Vec<f64> = (0..d).map(|r| (0..d).map(|k| inv[(r, k)] * u[k]).sum()).collect();
    let unorm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut best: Option<(f64, Vec<i64>, i64)> = None;
    for n in 1..=max_denominator.max(1) {
        let z: Vec<i64> = coords.iter().map(|x| (x * n as f64).round() as i64).collect();
        if z.iter().all(|&x| x == 0) {
            continue;
        }
        let p = realization.translation(&z);
        let pn = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        let cos = p.iter().zip(u).map(|(a, b)| a * b).sum::<f64>() / (pn * unorm);
        let angle = cos.clamp(-1.0, 1.0).acos();
        if best.as_ref().is_none_or(|b| angle < b.0 - 1e-12) {
            best = Some((angle, z, n));
        }
    }
    let (_, z, n) = best.ok_or_else(|| Error::InvalidArgument("cannot rationalize a zero direction".into()))?;
    Ok(z.into_iter().map(|x| Rational64::new(x, n)).collect())
}

pub(crate) fn is_zero_direction(c: &[Rational64]) -> bool {
    c.iter().all(Zero::is_zero)
}

/// Exact `a == s b` for some rational `s`; returns `s`.
pub(crate) fn rational_multiple(a: &[Rational64], b: &[Rational64]) -> Option<Rational64> {
    let k = b.iter().position(|x| !x.is_zero())?;
    let s = a[k] / b[k];
    a.iter().zip(b).all(|(x, y)| *x == s * y).then_some(s)
}

pub(crate) fn abs_rational(x: &Rational64) -> Rational64 {
    x.abs()
}

/// Sample mean and its standard error, summed in index order.
pub fn mean_and_std_error(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Hex SHA-256 of the lattice file text.
pub fn lattice_hash(lattice: &CrystalLattice, realization: &Realization) -> String {
    let digest = Sha256::digest(write_lattice(lattice, realization).as_bytes());
    let mut out = String::with_capacity(64);
    for b in digest.iter() {
        write!(out, "{b:02x}").unwrap();
    }
    out
}

/// Reproducibility envelope attached to every estimator report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub lattice_hash: String,
    pub distribution: String,
    pub base_seed: u64,
    pub lanes: Vec<u32>,
    pub k_max: Option<u64>,
    pub replicas: u32,
    /// Largest window used, as `lo..hi` translation boxes.
    pub windows: Vec<String>,
    /// Replicas whose result touched the margin and were rerun.
    pub boundary_flags: usize,
    pub edge_connectivity: Option<usize>,
    pub moment_witness: String,
}

/// Outcome of the moment gate run before every estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentGate {
    /// `l_X`, computed only when the law has a heavy tail.
    pub edge_connectivity: Option<usize>,
    pub check: MomentCheck,
}

/// Refuses laws with `E[min(t_1, …, t_l)^d] = ∞`, where `l` is the edge
/// connectivity and `d` the dimension. Light-tailed laws pass with `l = 1`,
/// which implies the condition for every `l`.
pub fn moment_gate(lattice: &CrystalLattice, realization: &Realization, distribution: &TimeDistribution) -> Result<MomentGate> {
    let power = u32::try_from(lattice.dim()).map_err(|_| Error::InvalidArgument("dimension too large".into()))?;
    let (edge_connectivity, copies) = match distribution {
        TimeDistribution::Pareto { .. } => {
            let l = edge_connectivity_estimate(lattice, realization, 3)?.value;
            (Some(l), l)
        }
        _ => (None, 1),
    };
    let check = moment_check(distribution, copies, power)?;
    if !check.finite {
        return Err(Error::MomentCondition { witness: check.witness });
    }
    Ok(MomentGate { edge_connectivity, check })
}

/// The realized vertex closest to the origin, same tie rule as
/// [`crate::lattice::closest_vertex`].
pub fn origin_vertex(realization: &Realization) -> LatticeVertex {
    let d = realization.dim();
    let origin = vec![0.0; d];
    let mut best: Option<(f64, LatticeVertex)> = None;
    for u in 0..realization.positions().len() {
        let c = realization.lattice_coordinates(u, &origin);
        let lo: Vec<i64> = c.iter().map(|x| x.floor() as i64 - 1).collect();
        let hi: Vec<i64> = c.iter().map(|x| x.ceil() as i64 + 1).collect();
        for z in box_points(&lo, &hi) {
            let p = realization.point(u, &z);
            let dist = p.iter().map(|x| x * x).sum::<f64>();
            let cand = LatticeVertex { base: u, index: z };
            let better = match &best {
                None => true,
                Some((bd, bv)) => dist < *bd || (dist == *bd && (&cand.index, cand.base) < (&bv.index, bv.base)),
            };
            if better {
                best = Some((dist, cand));
            }
        }
    }
    best.expect("realization has base vertices").1
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchOptions {
    pub replicas: u32,
    /// Margin in translation layers added around the core box at first.
    pub initial_margin: Option<i64>,
    /// Doublings of the margin tried before giving up.
    pub max_rounds: u32,
    pub window: WindowOptions,
}

impl BatchOptions {
    pub fn new(replicas: u32) -> Self {
        Self { replicas, initial_margin: None, max_rounds: 4, window: WindowOptions::default() }
    }
}

pub(crate) struct BatchOutcome<T> {
    pub results: Vec<T>,
    pub window: String,
    pub flagged: usize,
}

/// Default margin `2 + ceil(L^{2/3})` for a core box of side `L` layers.
pub(crate) fn default_margin(core_lo: &[f64], core_hi: &[f64]) -> i64 {
    let side = core_lo.iter().zip(core_hi).map(|(a, b)| b - a).fold(0.0f64, f64::max);
    2 + side.powf(2.0 / 3.0).ceil() as i64
}

/// Runs `replica` for every replica on a window covering the real index box
/// `[core_lo, core_hi]` plus a margin. When any replica reports a boundary
/// flag the whole batch reruns with the margin doubled, so accepted results
/// never come from a flagged run.
pub(crate) fn run_batch<T: Send>(
    lattice: &CrystalLattice,
    realization: &Realization,
    core_lo: &[f64],
    core_hi: &[f64],
    options: &BatchOptions,
    replica: impl Fn(&Window, u32) -> Result<(T, bool)> + Sync,
) -> Result<BatchOutcome<T>> {
    let mut margin = options.initial_margin.unwrap_or_else(|| default_margin(core_lo, core_hi)).max(1);
    let mut flagged_total = 0usize;
    for _ in 0..=options.max_rounds {
        let lo: Vec<i64> = core_lo.iter().map(|x| x.floor() as i64 - margin).collect();
        let hi: Vec<i64> = core_hi.iter().map(|x| x.ceil() as i64 + margin).collect();
        let window = Window::with_bounds(lattice, realization, lo.clone(), hi.clone(), options.window)?;
        let runs: Vec<(T, bool)> = (0..options.replicas).into_par_iter().map(|i| replica(&window, i)).collect::<Result<_>>()?;
        let flagged = runs.iter().filter(|r| r.1).count();
        if flagged == 0 {
            return Ok(BatchOutcome {
                results: runs.into_iter().map(|r| r.0).collect(),
                window: format!("{lo:?}..{hi:?}"),
                flagged: flagged_total,
            });
        }
        flagged_total += flagged;
        margin *= 2;
    }
    Err(Error::WindowTooSmall(format!(
        "{flagged_total} boundary-flagged replicas after {} margin doublings",
        options.max_rounds
    )))
}
