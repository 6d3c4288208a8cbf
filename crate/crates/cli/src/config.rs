//! Experiment configuration: a TOML document, overridden field by field by
//! command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use crystal_fpp::estimate::{parse_direction, Direction};
use crystal_fpp::fpp::TimeDistribution;
use crystal_fpp::lattice::{build_preset, parse_lattice, CrystalLattice, Realization};
use crystal_fpp::quotient::KernelSublattice;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Preset name, e.g. `cubic2` or `triangular`.
    pub preset: Option<String>,
    /// Lattice file in the text format of `write_lattice`.
    pub lattice_file: Option<PathBuf>,
    /// Kernel generators, one integer column per entry.
    pub kernel: Option<Vec<Vec<i64>>>,
    /// `family:params`, e.g. `exponential:1`.
    pub distribution: Option<String>,
    pub base_seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub threads: Option<usize>,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub tolerance: ToleranceConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    pub k_max: Option<u64>,
    pub replicas: Option<u32>,
    pub n_dirs: Option<usize>,
    /// Rational directions such as `"1,-1/2"`.
    pub directions: Option<Vec<String>>,
    pub t_grid: Option<Vec<f64>>,
    pub p_grid: Option<Vec<f64>>,
    /// Translation index of the quotient target vertex.
    pub x1: Option<Vec<i64>>,
    pub x1_base: Option<usize>,
    /// `exhaustive` or `monte_carlo`.
    pub mode: Option<String>,
    pub budget: Option<u64>,
    pub sub_radius: Option<i64>,
    pub max_denominator: Option<i64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    /// Verdict slack in standard errors.
    pub std_errors: Option<f64>,
    /// Estimates below this count as zero.
    pub zero_threshold: Option<f64>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    /// `self` with every field that `flags` sets replaced.
    pub fn overridden_by(self, flags: ExperimentConfig) -> Self {
        let e = flags.estimator;
        let t = flags.tolerance;
        let (preset, lattice_file) = if flags.preset.is_some() || flags.lattice_file.is_some() {
            (flags.preset, flags.lattice_file)
        } else {
            (self.preset, self.lattice_file)
        };
        Self {
            preset,
            lattice_file,
            kernel: flags.kernel.or(self.kernel),
            distribution: flags.distribution.or(self.distribution),
            base_seed: flags.base_seed.or(self.base_seed),
            output: flags.output.or(self.output),
            threads: flags.threads.or(self.threads),
            estimator: EstimatorConfig {
                k_max: e.k_max.or(self.estimator.k_max),
                replicas: e.replicas.or(self.estimator.replicas),
                n_dirs: e.n_dirs.or(self.estimator.n_dirs),
                directions: e.directions.or(self.estimator.directions),
                t_grid: e.t_grid.or(self.estimator.t_grid),
                p_grid: e.p_grid.or(self.estimator.p_grid),
                x1: e.x1.or(self.estimator.x1),
                x1_base: e.x1_base.or(self.estimator.x1_base),
                mode: e.mode.or(self.estimator.mode),
                budget: e.budget.or(self.estimator.budget),
                sub_radius: e.sub_radius.or(self.estimator.sub_radius),
                max_denominator: e.max_denominator.or(self.estimator.max_denominator),
            },
            tolerance: ToleranceConfig {
                std_errors: t.std_errors.or(self.tolerance.std_errors),
                zero_threshold: t.zero_threshold.or(self.tolerance.zero_threshold),
            },
        }
    }

    /// Checks every field and fills in defaults.
    pub fn resolve(&self) -> Result<Experiment> {
        let (lattice, realization, lattice_name) = match (&self.preset, &self.lattice_file) {
            (Some(_), Some(_)) => bail!("field `preset` conflicts with `lattice_file`; give one"),
            (None, None) => bail!("field `preset` or `lattice_file` is required"),
            (Some(name), None) => {
                let (l, r) = build_preset(name).with_context(|| format!("field `preset`: {name}"))?;
                (l, r, name.clone())
            }
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("field `lattice_file`: reading {}", path.display()))?;
                let (l, r) = parse_lattice(&text).with_context(|| format!("field `lattice_file`: {}", path.display()))?;
                (l, r, path.display().to_string())
            }
        };
        let d = lattice.dim();
        let kernel = match &self.kernel {
            None => None,
            Some(cols) => {
                if let Some(c) = cols.iter().find(|c| c.len() != d) {
                    bail!("field `kernel`: column {c:?} has {} entries, the lattice has dimension {d}", c.len());
                }
                Some(KernelSublattice::from_columns(d, cols).context("field `kernel`")?)
            }
        };
        let distribution = match &self.distribution {
            None => None,
            Some(s) => Some(s.parse::<TimeDistribution>().with_context(|| format!("field `distribution`: {s}"))?),
        };
        let e = &self.estimator;
        let directions = e
            .directions
            .as_ref()
            .map(|ds| ds.iter().map(|s| parse_direction(s).with_context(|| format!("field `estimator.directions`: {s}"))).collect::<Result<Vec<_>>>())
            .transpose()?;
        if let Some(c) = directions.iter().flatten().find(|c| c.len() != d) {
            bail!("field `estimator.directions`: direction has {} coordinates, the lattice has dimension {d}", c.len());
        }
        let positive = |name: &str, v: Option<u64>, default: u64| -> Result<u64> {
            match v {
                Some(0) => bail!("field `{name}` must be positive"),
                Some(v) => Ok(v),
                None => Ok(default),
            }
        };
        let mode = match e.mode.as_deref() {
            None | Some("exhaustive") => LiftMode::Exhaustive,
            Some("monte_carlo") => LiftMode::MonteCarlo,
            Some(other) => bail!("field `estimator.mode`: `{other}` is neither `exhaustive` nor `monte_carlo`"),
        };
        let std_errors = self.tolerance.std_errors.unwrap_or(3.0);
        if !(std_errors >= 0.0 && std_errors.is_finite()) {
            bail!("field `tolerance.std_errors` must be a nonnegative number");
        }
        let zero_threshold = self.tolerance.zero_threshold.unwrap_or(0.02);
        if !(zero_threshold >= 0.0 && zero_threshold.is_finite()) {
            bail!("field `tolerance.zero_threshold` must be a nonnegative number");
        }
        if self.threads == Some(0) {
            bail!("field `threads` must be positive");
        }
        Ok(Experiment {
            lattice,
            realization,
            lattice_name,
            kernel,
            distribution,
            base_seed: self.base_seed.unwrap_or(0),
            output: self.output.clone().unwrap_or_else(|| PathBuf::from("out")),
            threads: self.threads,
            k_max: positive("estimator.k_max", e.k_max, 20)?,
            replicas: positive("estimator.replicas", e.replicas.map(u64::from), 100)? as u32,
            n_dirs: positive("estimator.n_dirs", e.n_dirs.map(|n| n as u64), 16)? as usize,
            directions,
            t_grid: e.t_grid.clone().unwrap_or_else(|| vec![0.0, 1.0, 2.0]),
            p_grid: e.p_grid.clone().unwrap_or_else(|| (0..=10).map(|i| i as f64 / 10.0).collect()),
            x1: e.x1.clone(),
            x1_base: e.x1_base.unwrap_or(0),
            mode,
            budget: e.budget.unwrap_or(1 << 20),
            sub_radius: e.sub_radius,
            max_denominator: positive("estimator.max_denominator", e.max_denominator.map(|m| m.max(0) as u64), 4)? as i64,
            std_errors,
            zero_threshold,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiftMode {
    Exhaustive,
    MonteCarlo,
}

/// A validated configuration with defaults applied.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub lattice: CrystalLattice,
    pub realization: Realization,
    pub lattice_name: String,
    pub kernel: Option<KernelSublattice>,
    pub distribution: Option<TimeDistribution>,
    pub base_seed: u64,
    pub output: PathBuf,
    pub threads: Option<usize>,
    pub k_max: u64,
    pub replicas: u32,
    pub n_dirs: usize,
    pub directions: Option<Vec<Direction>>,
    pub t_grid: Vec<f64>,
    pub p_grid: Vec<f64>,
    pub x1: Option<Vec<i64>>,
    pub x1_base: usize,
    pub mode: LiftMode,
    pub budget: u64,
    pub sub_radius: Option<i64>,
    pub max_denominator: i64,
    pub std_errors: f64,
    pub zero_threshold: f64,
}

impl Experiment {
    pub fn distribution(&self) -> Result<&TimeDistribution> {
        self.distribution.as_ref().context("field `distribution` is required for this command")
    }

    pub fn kernel(&self) -> Result<&KernelSublattice> {
        self.kernel.as_ref().context("field `kernel` is required for this command")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected_with_a_location() {
        let err = toml::from_str::<ExperimentConfig>("preset = \"cubic2\"\nreplica = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("replica") && msg.contains("line 2"), "{msg}");
        assert!(toml::from_str::<ExperimentConfig>("[estimator]\nkmax = 3\n").is_err());
    }

    #[test]
    fn flags_win() {
        let file: ExperimentConfig = toml::from_str("preset = \"cubic2\"\nbase_seed = 4\n[estimator]\nk_max = 7\nreplicas = 9\n").unwrap();
        let flags = ExperimentConfig {
            lattice_file: Some("x.lat".into()),
            estimator: EstimatorConfig { k_max: Some(3), ..Default::default() },
            ..Default::default()
        };
        let merged = file.overridden_by(flags);
        assert_eq!(merged.preset, None);
        assert_eq!(merged.lattice_file, Some("x.lat".into()));
        assert_eq!(merged.base_seed, Some(4));
        assert_eq!(merged.estimator.k_max, Some(3));
        assert_eq!(merged.estimator.replicas, Some(9));
    }

    #[test]
    fn resolution_checks_fields() {
        let cfg = |s: &str| toml::from_str::<ExperimentConfig>(s).unwrap().resolve();
        assert!(cfg("preset = \"cubic2\"").is_ok());
        assert!(cfg("").is_err());
        let torsion = cfg("preset = \"cubic2\"\nkernel = [[2, 0]]").unwrap_err();
        assert!(format!("{torsion:#}").contains("[2]"), "{torsion:#}");
        assert!(cfg("preset = \"cubic2\"\ndistribution = \"gamma:1\"").is_err());
        assert!(cfg("preset = \"cubic2\"\n[estimator]\nk_max = 0").is_err());
        assert!(cfg("preset = \"cubic2\"\n[estimator]\ndirections = [\"1,0,0\"]").is_err());
    }
}
