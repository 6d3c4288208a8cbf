use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lattice::Window;

use super::TimeDistribution;

/// Lane of the covering lattice `X` in joint experiments.
pub const LANE_COVER: u32 = 0;
/// Lane of the quotient lattice `X1` in joint experiments.
pub const LANE_QUOTIENT: u32 = 1;

/// Where a configuration's randomness comes from.
///
/// Replica `i` on lane `l` draws from the ChaCha8 keystream keyed by
/// `base_seed` with stream number `l << 32 | i`. Distinct streams of one key
/// never overlap, so every (lane, replica) pair is independent and a batch
/// gives the same numbers whether it runs serially or in parallel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedPlan {
    pub base_seed: u64,
    pub lane: u32,
}

impl SeedPlan {
    pub fn new(base_seed: u64, lane: u32) -> Self {
        Self { base_seed, lane }
    }

    pub fn stream(&self, replica: u32) -> u64 {
        (u64::from(self.lane) << 32) | u64::from(replica)
    }

    pub fn rng(&self, replica: u32) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.base_seed);
        rng.set_stream(self.stream(replica));
        rng
    }

    pub fn with_lane(&self, lane: u32) -> Self {
        Self { lane, ..*self }
    }
}

/// One time per edge orbit of a window, indexed by orbit id.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    times: Vec<f64>,
    pub distribution: Option<TimeDistribution>,
    pub seed: Option<SeedPlan>,
    pub replica: u32,
}

impl Configuration {
    /// Draws the orbit times in ascending orbit id from replica `replica` of `plan`.
    pub fn sample(window: &Window, distribution: &TimeDistribution, plan: SeedPlan, replica: u32) -> Self {
        let mut rng = plan.rng(replica);
        let times = (0..window.orbit_count()).map(|_| distribution.sample(&mut rng)).collect();
        Self { times, distribution: Some(*distribution), seed: Some(plan), replica }
    }

    pub fn from_times(window: &Window, times: Vec<f64>) -> Result<Self> {
        if times.len() != window.orbit_count() {
            return Err(Error::DimensionMismatch { expected: window.orbit_count(), got: times.len() });
        }
        if let Some(t) = times.iter().find(|t| !(**t >= 0.0)) {
            return Err(Error::InvalidArgument(format!("edge time {t} is not a nonnegative number")));
        }
        Ok(Self { times, distribution: None, seed: None, replica: 0 })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn time(&self, orbit: usize) -> f64 {
        self.times[orbit]
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `orbit,time` rows; times print in shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("orbit,time\n");
        for (o, t) in self.times.iter().enumerate() {
            writeln!(out, "{o},{t}").unwrap();
        }
        out
    }
}

/// Draws one configuration, the entry point used by the CLI and examples.
pub fn sample_configuration(window: &Window, distribution: &TimeDistribution, seed: u64) -> Configuration {
    Configuration::sample(window, distribution, SeedPlan::new(seed, LANE_COVER), 0)
}
