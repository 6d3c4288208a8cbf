use num_rational::Rational64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fpp::{passage_times, Configuration, SeedPlan, TimeDistribution};
use crate::lattice::{CrystalLattice, Realization};

use super::common::{
    direction_denominator, is_zero_direction, lattice_hash, mean_and_std_error, moment_gate, origin_vertex, run_batch,
    scaled_step, BatchOptions, Provenance,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateOptions {
    pub k_max: u64,
    pub seed: SeedPlan,
    pub batch: BatchOptions,
}

impl EstimateOptions {
    pub fn new(k_max: u64, replicas: u32, seed: SeedPlan) -> Self {
        Self { k_max, seed, batch: BatchOptions::new(replicas) }
    }
}

/// Mean of `T(0, k N x) / (k N)` over replicas at one `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub k: u64,
    pub mean: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeConstantEstimate {
    pub direction: Vec<Rational64>,
    /// Least `N` with `N x` in the period lattice.
    pub denominator: i64,
    pub k_max: u64,
    pub replicas: u32,
    /// Per replica `T(0, k_max N x) / (k_max N)`.
    pub samples: Vec<f64>,
    pub point_estimate: f64,
    pub std_error: f64,
    pub trace: Vec<TraceEntry>,
    /// The law is degenerate, so the estimate is exact.
    pub exact: bool,
    pub provenance: Provenance,
}

impl TimeConstantEstimate {
    /// `k_max N`, the multiple of the direction that was targeted.
    pub fn scale(&self) -> u64 {
        self.k_max * self.denominator as u64
    }
}

/// Plug-in estimate of `μ(x)` from `T(0, k_max N x) / (k_max N)`, averaged
/// over independent replicas.
///
/// `direction` holds rational coordinates in the period basis. The source is
/// the realized vertex closest to the origin and the targets are its
/// translates by `k N x`, `k = 1..=k_max`. Every replica must be free of
/// boundary flags; the window grows until that holds.
pub fn estimate_time_constant(
    lattice: &CrystalLattice,
    realization: &Realization,
    distribution: &TimeDistribution,
    direction: &[Rational64],
    options: &EstimateOptions,
) -> Result<TimeConstantEstimate> {
    let d = lattice.dim();
    if direction.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: direction.len() });
    }
    if is_zero_direction(direction) {
        return Err(Error::InvalidArgument("direction must be nonzero".into()));
    }
    if options.k_max == 0 {
        return Err(Error::InvalidArgument("k_max must be at least 1".into()));
    }
    let exact = distribution.is_degenerate();
    if options.batch.replicas == 0 || (options.batch.replicas < 2 && !exact) {
        return Err(Error::InvalidArgument("a random law needs at least 2 replicas".into()));
    }
    let gate = moment_gate(lattice, realization, distribution)?;

    let n = direction_denominator(direction);
    let step = scaled_step(direction, n)?;
    let source = origin_vertex(realization);
    let k_max = i64::try_from(options.k_max).map_err(|_| Error::Overflow("k_max"))?;
    let targets: Vec<Vec<i64>> = (1..=k_max)
        .map(|k| source.index.iter().zip(&step).map(|(z, s)| z + k * s).collect())
        .collect();
    let last = targets.last().expect("k_max >= 1");
    let core_lo: Vec<f64> = source.index.iter().zip(last).map(|(a, b)| (*a).min(*b) as f64).collect();
    let core_hi: Vec<f64> = source.index.iter().zip(last).map(|(a, b)| (*a).max(*b) as f64).collect();

    let outcome = run_batch(lattice, realization, &core_lo, &core_hi, &options.batch, |window, replica| {
        let config = Configuration::sample(window, distribution, options.seed, replica);
        let s = window.lookup(source.base, &source.index).expect("source inside the core box");
        let res = passage_times(window, &config, s)?;
        let mut flagged = false;
        let mut times = Vec::with_capacity(targets.len());
        for z in &targets {
            let t = window.lookup(source.base, z).expect("targets inside the core box");
            flagged |= res.boundary_touched[t];
            times.push(res.times[t]);
        }
        Ok((times, flagged))
    })?;

    let trace: Vec<TraceEntry> = (0..targets.len())
        .map(|i| {
            let scale = ((i as i64 + 1) * n) as f64;
            let xs: Vec<f64> = outcome.results.iter().map(|r| r[i] / scale).collect();
            let (mean, std_error) = mean_and_std_error(&xs);
            TraceEntry { k: i as u64 + 1, mean, std_error }
        })
        .collect();
    let scale = (k_max * n) as f64;
    let samples: Vec<f64> = outcome.results.iter().map(|r| r[r.len() - 1] / scale).collect();
    let (point_estimate, std_error) = mean_and_std_error(&samples);
    Ok(TimeConstantEstimate {
        direction: direction.to_vec(),
        denominator: n,
        k_max: options.k_max,
        replicas: options.batch.replicas,
        samples,
        point_estimate,
        std_error: if exact { 0.0 } else { std_error },
        trace,
        exact,
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::parse_direction;
    use crate::lattice::{build_preset, parallel_line};

    #[test]
    fn unit_times_on_the_square_lattice() {
        let (l, r) = build_preset("cubic2").unwrap();
        let det = TimeDistribution::deterministic(1.0).unwrap();
        let est = estimate_time_constant(&l, &r, &det, &parse_direction("1,0").unwrap(), &EstimateOptions::new(10, 1, SeedPlan::new(1, 0))).unwrap();
        assert_eq!(est.point_estimate, 1.0);
        assert_eq!(est.std_error, 0.0);
        assert!(est.trace.iter().all(|t| t.mean == 1.0));
        let est = estimate_time_constant(&l, &r, &det, &parse_direction("1/2,-1/3").unwrap(), &EstimateOptions::new(3, 1, SeedPlan::new(1, 0))).unwrap();
        assert_eq!(est.denominator, 6);
        assert!((est.point_estimate - 5.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn exponential_minimum_on_the_doubled_line() {
        let (l, r) = parallel_line(2).unwrap();
        let exp = TimeDistribution::exponential(1.0).unwrap();
        let est = estimate_time_constant(&l, &r, &exp, &parse_direction("1").unwrap(), &EstimateOptions::new(50, 100, SeedPlan::new(7, 0))).unwrap();
        assert!((est.point_estimate - 0.5).abs() < 4.0 * est.std_error, "{} ± {}", est.point_estimate, est.std_error);
        assert_eq!(est.provenance.boundary_flags, 0);
    }

    #[test]
    fn reproducible_and_seed_sensitive() {
        let (l, r) = build_preset("cubic2").unwrap();
        let exp = TimeDistribution::exponential(1.0).unwrap();
        let x = parse_direction("1,0").unwrap();
        let a = estimate_time_constant(&l, &r, &exp, &x, &EstimateOptions::new(5, 8, SeedPlan::new(3, 0))).unwrap();
        let b = estimate_time_constant(&l, &r, &exp, &x, &EstimateOptions::new(5, 8, SeedPlan::new(3, 0))).unwrap();
        let c = estimate_time_constant(&l, &r, &exp, &x, &EstimateOptions::new(5, 8, SeedPlan::new(4, 0))).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn refusals() {
        let (l, r) = build_preset("cubic2").unwrap();
        let exp = TimeDistribution::exponential(1.0).unwrap();
        let opts = EstimateOptions::new(5, 8, SeedPlan::new(3, 0));
        assert!(estimate_time_constant(&l, &r, &exp, &parse_direction("0,0").unwrap(), &opts).is_err());
        assert!(estimate_time_constant(&l, &r, &exp, &parse_direction("1").unwrap(), &opts).is_err());
        let heavy = TimeDistribution::pareto(0.4, 1.0).unwrap();
        assert!(matches!(
            estimate_time_constant(&l, &r, &heavy, &parse_direction("1,0").unwrap(), &opts),
            Err(Error::MomentCondition { .. })
        ));
    }
}
