use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fpp::{passage_times, restricted_passage, Configuration, SeedPlan, TimeDistribution, LANE_COVER, LANE_QUOTIENT};
use crate::lattice::{CrystalLattice, LatticeVertex, Realization, Window, WindowOptions};
use crate::quotient::{build_quotient, covering_fiber, KernelSublattice, QuotientData};

use super::common::lattice_hash;
use super::norm::EXACT_TOLERANCE;

/// Caps the self-avoiding path enumeration that sizes the covering window.
pub const DEFAULT_PATH_CAP: usize = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LiftingMode {
    /// Enumerate every atom assignment on both windows; `budget` caps the
    /// total number of configurations.
    Exhaustive { budget: u128 },
    MonteCarlo { replicas: u32, base_seed: u64, tol_std_errors: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftingOptions {
    pub mode: LiftingMode,
    /// Radius of the quotient window; defaults to the smallest one holding `x1`.
    pub sub_radius: Option<i64>,
    pub path_cap: usize,
}

impl LiftingOptions {
    pub fn exhaustive(budget: u128) -> Self {
        Self { mode: LiftingMode::Exhaustive { budget }, sub_radius: None, path_cap: DEFAULT_PATH_CAP }
    }

    pub fn monte_carlo(replicas: u32, base_seed: u64) -> Self {
        Self { mode: LiftingMode::MonteCarlo { replicas, base_seed, tol_std_errors: 3.0 }, sub_radius: None, path_cap: DEFAULT_PATH_CAP }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiftingRow {
    pub t: f64,
    /// `P(T1(0, x1) >= t)` with passage restricted to the quotient window.
    pub lhs: f64,
    /// `P(T(0, y) >= t for every lift y of x1 in the covering window)`.
    pub rhs: f64,
    /// Exact values as reduced fractions in exhaustive mode.
    pub lhs_exact: Option<String>,
    pub rhs_exact: Option<String>,
    pub slack: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiftingReport {
    pub mode: String,
    /// Always "window-restricted": the fiber is truncated to the covering window.
    pub scope: String,
    pub x1: LatticeVertex,
    pub sub_radius: i64,
    pub cover_radius: i64,
    pub quotient_orbits: usize,
    pub cover_orbits: usize,
    pub fiber_size: usize,
    pub configurations: Option<u128>,
    pub replicas: Option<u32>,
    pub rows: Vec<LiftingRow>,
    pub passed: bool,
    pub lattice_hash: String,
    pub distribution: String,
}

/// Largest `|index|_∞` reached by lifting, from translation 0 of the covering
/// lattice, any self-avoiding path of `window1` starting at `source1`.
fn lift_radius(qdata: &QuotientData, window1: &Window, source1: usize, cap: usize) -> Result<i64> {
    let d = qdata.lattice.dim();
    let mut visited = vec![false; window1.vertex_count()];
    let mut index = vec![0i64; d];
    let mut best = 0i64;
    let mut paths = 0usize;
    // (vertex, next neighbor slot)
    let mut stack: Vec<(usize, usize)> = vec![(source1, 0)];
    let mut trail: Vec<usize> = Vec::new();
    visited[source1] = true;
    while let Some(top) = stack.last_mut() {
        let (v, slot) = *top;
        let nbrs = window1.neighbors(v);
        if slot == nbrs.len() {
            visited[v] = false;
            stack.pop();
            if let Some(e) = trail.pop() {
                for (z, s) in index.iter_mut().zip(qdata.lattice.voltage(e)) {
                    *z -= s;
                }
            }
            continue;
        }
        top.1 += 1;
        let a = nbrs[slot];
        if visited[a.to] {
            continue;
        }
        paths += 1;
        if paths > cap {
            return Err(Error::InvalidArgument(format!(
                "more than {cap} self-avoiding paths in the quotient window; lower the radius or raise the path cap"
            )));
        }
        for (z, s) in index.iter_mut().zip(qdata.lattice.voltage(a.base_edge)) {
            *z += s;
        }
        best = best.max(index.iter().map(|z| z.abs()).max().unwrap_or(0));
        visited[a.to] = true;
        trail.push(a.base_edge);
        stack.push((a.to, 0));
    }
    Ok(best)
}

/// Exact `P(value >= t)` for every threshold, over all atom assignments of
/// the window's orbits. Assignments are tallied by how often each atom
/// occurs, so each probability is a sum of `count * prod p_i^{n_i}`.
fn exhaustive_tails(
    window: &Window,
    atoms: &[(f64, BigRational)],
    thresholds: &[f64],
    value: impl Fn(&Configuration) -> Result<f64>,
) -> Result<Vec<BigRational>> {
    let m = window.orbit_count();
    let mut digits = vec![0usize; m];
    let mut tally: HashMap<Vec<u32>, Vec<u64>> = HashMap::new();
    loop {
        let times: Vec<f64> = digits.iter().map(|&i| atoms[i].0).collect();
        let v = value(&Configuration::from_times(window, times)?)?;
        let mut signature = vec![0u32; atoms.len()];
        for &i in &digits {
            signature[i] += 1;
        }
        let counts = tally.entry(signature).or_insert_with(|| vec![0; thresholds.len()]);
        for (c, t) in counts.iter_mut().zip(thresholds) {
            if v >= *t {
                *c += 1;
            }
        }
        let Some(pos) = digits.iter().rposition(|&i| i + 1 < atoms.len()) else { break };
        digits[pos] += 1;
        for i in &mut digits[pos + 1..] {
            *i = 0;
        }
    }
    let mut out = vec![BigRational::zero(); thresholds.len()];
    for (signature, counts) in tally {
        let weight = signature
            .iter()
            .zip(atoms)
            .fold(BigRational::from_integer(BigInt::from(1)), |w, (&n, (_, p))| w * num_traits::pow(p.clone(), n as usize));
        for (o, &c) in out.iter_mut().zip(&counts) {
            *o += &weight * BigRational::from_integer(BigInt::from(c));
        }
    }
    Ok(out)
}

fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Compares `P(T1(0, x1) >= t)` on the quotient with
/// `P(min_y T(0, y) >= t)` over the lifts `y` of `x1` on the cover, for each
/// `t` in `t_grid`.
///
/// Both sides are window-restricted: `T1` only uses the quotient window
/// `[-R1, R1]^{d1}`, and the covering window is the smallest centred box that
/// holds every lift of every self-avoiding path of that window, so each
/// restricted quotient path has all its lifts available on the cover. The two
/// configurations are independent (lanes 1 and 0 in Monte Carlo mode).
pub fn lifting_inequality_check(
    lattice: &CrystalLattice,
    realization: &Realization,
    kernel: &KernelSublattice,
    distribution: &TimeDistribution,
    x1: &LatticeVertex,
    t_grid: &[f64],
    options: &LiftingOptions,
) -> Result<LiftingReport> {
    let qd = build_quotient(lattice, realization, kernel)?;
    let d1 = qd.dim();
    if x1.index.len() != d1 {
        return Err(Error::DimensionMismatch { expected: d1, got: x1.index.len() });
    }
    if x1.base >= lattice.base().vertex_count() {
        return Err(Error::InvalidArgument(format!("base vertex {} does not exist", x1.base)));
    }
    if t_grid.is_empty() || t_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidArgument("t grid must be a nonempty list of finite values".into()));
    }
    let needed = x1.index.iter().map(|z| z.abs()).max().unwrap_or(0);
    let r1 = options.sub_radius.unwrap_or(needed);
    if r1 < needed {
        return Err(Error::InvalidArgument(format!("sub-window radius {r1} does not contain x1")));
    }
    let window1 = Window::centered(&qd.quotient_lattice, &qd.quotient_realization, r1, WindowOptions::default())?;
    let source1 = window1.lookup(0, &vec![0; d1]).expect("origin inside the window");
    let target1 = window1.lookup(x1.base, &x1.index).expect("x1 inside the window");
    let cover_radius = lift_radius(&qd, &window1, source1, options.path_cap)?;
    let window = Window::centered(lattice, realization, cover_radius, WindowOptions::default())?;
    let source = window.lookup(0, &vec![0; lattice.dim()]).expect("origin inside the window");
    let fiber = covering_fiber(&qd, &window1, target1, &window)?;
    if fiber.is_empty() {
        return Err(Error::WindowTooSmall("no lift of x1 in the covering window".into()));
    }

    let lhs_value = |c: &Configuration| restricted_passage(&window1, c, source1, target1, r1);
    let rhs_value = |c: &Configuration| -> Result<f64> {
        let res = passage_times(&window, c, source)?;
        Ok(fiber.iter().map(|&y| res.times[y]).fold(f64::INFINITY, f64::min))
    };

    let (m1, m) = (window1.orbit_count(), window.orbit_count());
    let mut report = LiftingReport {
        mode: String::new(),
        scope: "window-restricted".into(),
        x1: x1.clone(),
        sub_radius: r1,
        cover_radius,
        quotient_orbits: m1,
        cover_orbits: m,
        fiber_size: fiber.len(),
        configurations: None,
        replicas: None,
        rows: Vec::new(),
        passed: false,
        lattice_hash: lattice_hash(lattice, realization),
        distribution: distribution.to_string(),
    };
    match options.mode {
        LiftingMode::Exhaustive { budget } => {
            let atoms = distribution
                .atoms()
                .ok_or_else(|| Error::InvalidArgument(format!("exhaustive mode needs an atomic law, got {distribution}")))?;
            let a = atoms.len() as u128;
            let required = [m1, m]
                .iter()
                .try_fold(0u128, |acc, &k| a.checked_pow(k as u32).and_then(|p| acc.checked_add(p)))
                .unwrap_or(u128::MAX);
            if required > budget {
                return Err(Error::BudgetExceeded { required, budget });
            }
            let lhs = exhaustive_tails(&window1, &atoms, t_grid, lhs_value)?;
            let rhs = exhaustive_tails(&window, &atoms, t_grid, rhs_value)?;
            report.mode = "exhaustive".into();
            report.configurations = Some(required);
            report.rows = t_grid
                .iter()
                .zip(lhs.iter().zip(&rhs))
                .map(|(&t, (l, r))| LiftingRow {
                    t,
                    lhs: ratio_to_f64(l),
                    rhs: ratio_to_f64(r),
                    lhs_exact: Some(l.to_string()),
                    rhs_exact: Some(r.to_string()),
                    slack: 0.0,
                    passed: l >= r,
                })
                .collect();
        }
        LiftingMode::MonteCarlo { replicas, base_seed, tol_std_errors } => {
            if replicas < 2 {
                return Err(Error::InvalidArgument("Monte Carlo mode needs at least 2 replicas".into()));
            }
            let plan1 = SeedPlan::new(base_seed, LANE_QUOTIENT);
            let plan = SeedPlan::new(base_seed, LANE_COVER);
            let values: Vec<(f64, f64)> = (0..replicas)
                .into_par_iter()
                .map(|i| {
                    let l = lhs_value(&Configuration::sample(&window1, distribution, plan1, i))?;
                    let r = rhs_value(&Configuration::sample(&window, distribution, plan, i))?;
                    Ok((l, r))
                })
                .collect::<Result<_>>()?;
            let n = replicas as f64;
            report.mode = "monte_carlo".into();
            report.replicas = Some(replicas);
            report.rows = t_grid
                .iter()
                .map(|&t| {
                    let lhs = values.iter().filter(|v| v.0 >= t).count() as f64 / n;
                    let rhs = values.iter().filter(|v| v.1 >= t).count() as f64 / n;
                    let se = ((lhs * (1.0 - lhs) + rhs * (1.0 - rhs)) / n).sqrt();
                    let slack = tol_std_errors * se + EXACT_TOLERANCE;
                    LiftingRow { t, lhs, rhs, lhs_exact: None, rhs_exact: None, slack, passed: lhs >= rhs - slack }
                })
                .collect();
        }
    }
    report.passed = report.rows.iter().all(|r| r.passed);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_preset;

    fn diagonal() -> (CrystalLattice, Realization, KernelSublattice) {
        let (l, r) = build_preset("cubic2").unwrap();
        (l, r, KernelSublattice::from_columns(2, &[vec![1, -1]]).unwrap())
    }

    #[test]
    fn one_step_on_the_doubled_line_is_exact() {
        let (l, r, k) = diagonal();
        let bern = TimeDistribution::bernoulli(0.5).unwrap();
        let x1 = LatticeVertex { base: 0, index: vec![1] };
        let report = lifting_inequality_check(&l, &r, &k, &bern, &x1, &[0.0, 1.0, 2.0], &LiftingOptions::exhaustive(1 << 20)).unwrap();
        assert_eq!(report.cover_radius, 1);
        assert_eq!(report.cover_orbits, 12);
        let lhs: Vec<_> = report.rows.iter().map(|r| r.lhs_exact.clone().unwrap()).collect();
        assert_eq!(lhs, ["1", "1/4", "0"]);
        assert_eq!(report.rows[0].rhs_exact.as_deref(), Some("1"));
        assert!(report.passed, "{report:?}");
    }

    #[test]
    fn budget_is_enforced() {
        let (l, r, k) = diagonal();
        let bern = TimeDistribution::bernoulli(0.5).unwrap();
        let x1 = LatticeVertex { base: 0, index: vec![1] };
        let err = lifting_inequality_check(&l, &r, &k, &bern, &x1, &[1.0], &LiftingOptions::exhaustive(100)).unwrap_err();
        assert_eq!(err, Error::BudgetExceeded { required: 16 + 4096, budget: 100 });
        let exp = TimeDistribution::exponential(1.0).unwrap();
        assert!(lifting_inequality_check(&l, &r, &k, &exp, &x1, &[1.0], &LiftingOptions::exhaustive(1 << 20)).is_err());
    }

    #[test]
    fn monte_carlo_agrees_in_the_easy_case() {
        let (l, r, k) = diagonal();
        let exp = TimeDistribution::exponential(1.0).unwrap();
        let x1 = LatticeVertex { base: 0, index: vec![1] };
        let report = lifting_inequality_check(&l, &r, &k, &exp, &x1, &[0.0, 0.5, 1.0], &LiftingOptions::monte_carlo(2000, 5)).unwrap();
        assert_eq!(report.rows[0].lhs, 1.0);
        assert!(report.passed, "{report:?}");
    }
}
