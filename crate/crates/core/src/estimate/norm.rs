use num_rational::Rational64;
use serde::Serialize;

use crate::error::{Error, Result};

use super::common::{abs_rational, format_direction, rational_multiple, to_f64};
use super::time_constant::TimeConstantEstimate;

/// Absolute slack added to every verdict, the whole slack for exact laws.
pub const EXACT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum NormRelation {
    /// `μ(x + y) <= μ(x) + μ(y)`
    Subadditive { x: usize, y: usize, sum: usize },
    /// `μ(c x) = |c| μ(x)`
    Homogeneous { x: usize, multiple: usize, c: Rational64 },
    /// `μ(-x) = μ(x)`
    Symmetric { x: usize, negation: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormCheck {
    pub relation: NormRelation,
    pub description: String,
    /// Left side minus right side; the check passes when it is at most the slack
    /// (in absolute value for equalities).
    pub gap: f64,
    pub slack: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormReport {
    pub checks: Vec<NormCheck>,
    pub tol_std_errors: f64,
    pub passed: bool,
}

fn pooled(ses: &[(f64, f64)]) -> f64 {
    ses.iter().map(|(w, s)| (w * s).powi(2)).sum::<f64>().sqrt()
}

fn add(a: &[Rational64], b: &[Rational64]) -> Vec<Rational64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Tests every subadditivity, homogeneity and symmetry relation that holds
/// exactly among the estimate directions, with slack `tol` pooled standard
/// errors plus [`EXACT_TOLERANCE`].
///
/// Homogeneity compares `μ̂(cx)` with `|c| μ̂(x)`; the plug-in bias cancels
/// when both targeted the same lattice point, i.e. equal
/// `k_max N |c|` multiples.
pub fn norm_property_report(estimates: &[TimeConstantEstimate], tol: f64) -> Result<NormReport> {
    if let Some(first) = estimates.first() {
        for e in estimates {
            if e.provenance.lattice_hash != first.provenance.lattice_hash || e.provenance.distribution != first.provenance.distribution {
                return Err(Error::Mismatch("estimates come from different lattices or distributions".into()));
            }
            if e.direction.len() != first.direction.len() {
                return Err(Error::Mismatch("estimates have different dimensions".into()));
            }
        }
    }
    let mut checks = Vec::new();
    let n = estimates.len();
    let mu = |i: usize| estimates[i].point_estimate;
    let se = |i: usize| estimates[i].std_error;
    for i in 0..n {
        for j in i..n {
            let sum = add(&estimates[i].direction, &estimates[j].direction);
            for k in 0..n {
                if estimates[k].direction == sum && k != i && k != j {
                    let gap = mu(k) - mu(i) - mu(j);
                    let slack = tol * pooled(&[(1.0, se(i)), (1.0, se(j)), (1.0, se(k))]) + EXACT_TOLERANCE;
                    checks.push(NormCheck {
                        relation: NormRelation::Subadditive { x: i, y: j, sum: k },
                        description: format!(
                            "mu({}) <= mu({}) + mu({})",
                            format_direction(&sum),
                            format_direction(&estimates[i].direction),
                            format_direction(&estimates[j].direction)
                        ),
                        gap,
                        slack,
                        passed: gap <= slack,
                    });
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let Some(c) = rational_multiple(&estimates[j].direction, &estimates[i].direction) else { continue };
            if c == Rational64::from_integer(1) || c == Rational64::from_integer(0) {
                continue;
            }
            let ac = to_f64(&abs_rational(&c));
            let gap = mu(j) - ac * mu(i);
            let slack = tol * pooled(&[(1.0, se(j)), (ac, se(i))]) + EXACT_TOLERANCE;
            let xs = format_direction(&estimates[i].direction);
            checks.push(NormCheck {
                relation: NormRelation::Homogeneous { x: i, multiple: j, c },
                description: format!("mu({c} * ({xs})) = |{c}| mu({xs})"),
                gap,
                slack,
                passed: gap.abs() <= slack,
            });
            if c == Rational64::from_integer(-1) && i < j {
                checks.push(NormCheck {
                    relation: NormRelation::Symmetric { x: i, negation: j },
                    description: format!("mu(-({xs})) = mu({xs})"),
                    gap,
                    slack,
                    passed: gap.abs() <= slack,
                });
            }
        }
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(NormReport { checks, tol_std_errors: tol, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::{estimate_time_constant, parse_direction, EstimateOptions};
    use crate::fpp::{SeedPlan, TimeDistribution};
    use crate::lattice::build_preset;

    #[test]
    fn deterministic_relations_are_exact() {
        let (l, r) = build_preset("cubic2").unwrap();
        let det = TimeDistribution::deterministic(1.0).unwrap();
        let ests: Vec<_> = ["1,0", "0,1", "1,1", "-1,0", "2,0"]
            .iter()
            .map(|s| estimate_time_constant(&l, &r, &det, &parse_direction(s).unwrap(), &EstimateOptions::new(4, 1, SeedPlan::new(0, 0))).unwrap())
            .collect();
        let report = norm_property_report(&ests, 3.0).unwrap();
        assert!(report.passed);
        let sub = report.checks.iter().find(|c| matches!(c.relation, NormRelation::Subadditive { x: 0, y: 1, sum: 2 })).unwrap();
        assert_eq!(sub.gap, 0.0);
        assert!(report.checks.iter().any(|c| matches!(c.relation, NormRelation::Symmetric { .. })));
        assert_eq!(report.checks.iter().filter(|c| matches!(c.relation, NormRelation::Homogeneous { .. })).count(), 6);
    }

    #[test]
    fn mismatched_inputs_are_rejected() {
        let (l, r) = build_preset("cubic2").unwrap();
        let x = parse_direction("1,0").unwrap();
        let opts = EstimateOptions::new(2, 1, SeedPlan::new(0, 0));
        let a = estimate_time_constant(&l, &r, &TimeDistribution::deterministic(1.0).unwrap(), &x, &opts).unwrap();
        let b = estimate_time_constant(&l, &r, &TimeDistribution::deterministic(2.0).unwrap(), &x, &opts).unwrap();
        assert!(norm_property_report(&[a, b], 3.0).is_err());
    }
}
