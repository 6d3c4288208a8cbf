use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use rand_distr::{Distribution, Exp, Pareto};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Law of a single edge passage time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum TimeDistribution {
    Deterministic { value: f64 },
    /// Time 0 with probability `p`, time 1 otherwise.
    Bernoulli { p: f64 },
    Uniform { low: f64, high: f64 },
    Exponential { rate: f64 },
    /// Density `α x_m^α / x^{α+1}` on `[x_m, ∞)`.
    Pareto { shape: f64, scale: f64 },
}

impl TimeDistribution {
    pub fn deterministic(value: f64) -> Result<Self> {
        Self::Deterministic { value }.validated()
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        Self::Bernoulli { p }.validated()
    }

    pub fn uniform(low: f64, high: f64) -> Result<Self> {
        Self::Uniform { low, high }.validated()
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::Exponential { rate }.validated()
    }

    pub fn pareto(shape: f64, scale: f64) -> Result<Self> {
        Self::Pareto { shape, scale }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidDistribution(msg));
        match self {
            Self::Deterministic { value } if !(value.is_finite() && value >= 0.0) => {
                bad(format!("deterministic value must be finite and >= 0, got {value}"))
            }
            Self::Bernoulli { p } if !(0.0..=1.0).contains(&p) => bad(format!("bernoulli p must lie in [0, 1], got {p}")),
            Self::Uniform { low, high } if !(low.is_finite() && high.is_finite() && 0.0 <= low && low <= high) => {
                bad(format!("uniform needs 0 <= low <= high, got [{low}, {high}]"))
            }
            Self::Exponential { rate } if !(rate.is_finite() && rate > 0.0) => bad(format!("exponential rate must be > 0, got {rate}")),
            Self::Pareto { shape, scale } if !(shape.is_finite() && shape > 0.0 && scale.is_finite() && scale > 0.0) => {
                bad(format!("pareto needs shape > 0 and scale > 0, got shape {shape}, scale {scale}"))
            }
            ok => Ok(ok),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            Self::Deterministic { .. } => "deterministic",
            Self::Bernoulli { .. } => "bernoulli",
            Self::Uniform { .. } => "uniform",
            Self::Exponential { .. } => "exponential",
            Self::Pareto { .. } => "pareto",
        }
    }

    /// `ν({0})`.
    pub fn atom_at_zero(&self) -> f64 {
        match *self {
            Self::Deterministic { value } => f64::from(value == 0.0),
            Self::Bernoulli { p } => p,
            Self::Uniform { low, high } => f64::from(low == 0.0 && high == 0.0),
            Self::Exponential { .. } | Self::Pareto { .. } => 0.0,
        }
    }

    /// Whether every sample is the same number.
    pub fn is_degenerate(&self) -> bool {
        match *self {
            Self::Deterministic { .. } => true,
            Self::Bernoulli { p } => p == 0.0 || p == 1.0,
            Self::Uniform { low, high } => low == high,
            _ => false,
        }
    }

    /// Atoms with exact probabilities, for purely atomic laws.
    pub fn atoms(&self) -> Option<Vec<(f64, BigRational)>> {
        match *self {
            Self::Deterministic { value } => Some(vec![(value, BigRational::one())]),
            Self::Uniform { low, high } if low == high => Some(vec![(low, BigRational::one())]),
            Self::Bernoulli { p } => {
                let p = BigRational::from_float(p)?;
                let q = BigRational::one() - &p;
                Some([(0.0, p), (1.0, q)].into_iter().filter(|(_, w)| !w.is_zero()).collect())
            }
            _ => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Deterministic { value } => value,
            Self::Bernoulli { p } => {
                if rng.random::<f64>() < p {
                    0.0
                } else {
                    1.0
                }
            }
            Self::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
            Self::Exponential { rate } => Exp::new(rate).expect("validated rate").sample(rng),
            Self::Pareto { shape, scale } => Pareto::new(scale, shape).expect("validated parameters").sample(rng),
        }
    }
}

impl fmt::Display for TimeDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Deterministic { value } => write!(f, "deterministic:{value}"),
            Self::Bernoulli { p } => write!(f, "bernoulli:{p}"),
            Self::Uniform { low, high } => write!(f, "uniform:{low},{high}"),
            Self::Exponential { rate } => write!(f, "exponential:{rate}"),
            Self::Pareto { shape, scale } => write!(f, "pareto:{shape},{scale}"),
        }
    }
}

/// Parses `family:param[,param]`, e.g. `exponential:1`, `uniform:0,2`,
/// `pareto:0.6` (scale defaults to 1).
impl FromStr for TimeDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (family, params) = s.split_once(':').unwrap_or((s, ""));
        let params: Vec<f64> = params
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| p.trim().parse().map_err(|_| Error::InvalidDistribution(format!("bad parameter `{p}` in `{s}`"))))
            .collect::<Result<_>>()?;
        let arity = |lo: usize, hi: usize| {
            if params.len() < lo || params.len() > hi {
                Err(Error::InvalidDistribution(format!("`{family}` takes {lo}..={hi} parameters, got {}", params.len())))
            } else {
                Ok(())
            }
        };
        match family.trim().to_ascii_lowercase().as_str() {
            "deterministic" => {
                arity(1, 1)?;
                Self::deterministic(params[0])
            }
            "bernoulli" => {
                arity(1, 1)?;
                Self::bernoulli(params[0])
            }
            "uniform" => {
                arity(2, 2)?;
                Self::uniform(params[0], params[1])
            }
            "exponential" => {
                arity(1, 1)?;
                Self::exponential(params[0])
            }
            "pareto" => {
                arity(1, 2)?;
                Self::pareto(params[0], params.get(1).copied().unwrap_or(1.0))
            }
            other => Err(Error::InvalidDistribution(format!("unknown family `{other}`"))),
        }
    }
}

/// Outcome of the moment condition `E[min(t_1, …, t_k)^d] < ∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentCheck {
    pub finite: bool,
    pub copies: usize,
    pub power: u32,
    /// Human-readable analytic justification.
    pub witness: String,
}

/// Decides `E[min(t_1, …, t_k)^power] < ∞` analytically.
///
/// Bounded families and the exponential have all moments. The minimum of
/// `k` independent Pareto(α, x_m) variables is Pareto(kα, x_m), whose
/// `power`-th moment is finite iff `kα > power`.
pub fn moment_check(distribution: &TimeDistribution, copies: usize, power: u32) -> Result<MomentCheck> {
    if copies == 0 || power == 0 {
        return Err(Error::InvalidArgument("moment check needs k >= 1 and power >= 1".into()));
    }
    let (finite, witness) = match *distribution {
        TimeDistribution::Pareto { shape, .. } => {
            let tail = copies as f64 * shape;
            let finite = tail > f64::from(power);
            let relation = if finite { ">" } else { "<=" };
            (
                finite,
                format!(
                    "min of {copies} pareto(alpha={shape}) times is pareto(alpha={tail}); its moment of order {power} is {} since k*alpha = {tail} {relation} {power}",
                    if finite { "finite" } else { "infinite" }
                ),
            )
        }
        TimeDistribution::Exponential { .. } => (true, "exponential times have finite moments of every order".to_string()),
        other => (true, format!("{} times are bounded, so every moment is finite", other.family())),
    };
    Ok(MomentCheck { finite, copies, power, witness })
}


#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["deterministic:1", "bernoulli:0.5", "uniform:0,2", "exponential:1", "pareto:0.4,1"] {
            let d: TimeDistribution = s.parse().unwrap();
            assert_eq!(d.to_string(), s);
        }
        assert_eq!("pareto:0.6".parse::<TimeDistribution>().unwrap(), TimeDistribution::Pareto { shape: 0.6, scale: 1.0 });
        assert!("bernoulli:1.5".parse::<TimeDistribution>().is_err());
        assert!("gamma:1".parse::<TimeDistribution>().is_err());
        assert!("uniform:1".parse::<TimeDistribution>().is_err());
    }

    #[test]
    fn atom_at_zero() {
        assert_eq!(TimeDistribution::bernoulli(0.3).unwrap().atom_at_zero(), 0.3);
        assert_eq!(TimeDistribution::deterministic(0.0).unwrap().atom_at_zero(), 1.0);
        assert_eq!(TimeDistribution::exponential(2.0).unwrap().atom_at_zero(), 0.0);
    }

    #[test]
    fn degenerate_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let one = TimeDistribution::bernoulli(1.0).unwrap();
        assert!((0..100).all(|_| one.sample(&mut rng) == 0.0));
        let zero = TimeDistribution::bernoulli(0.0).unwrap();
        assert!((0..100).all(|_| zero.sample(&mut rng) == 1.0));
        let pareto = TimeDistribution::pareto(0.5, 2.0).unwrap();
        assert!((0..100).all(|_| pareto.sample(&mut rng) >= 2.0));
    }

    #[test]
    fn moment_examples() {
        let exp = TimeDistribution::exponential(1.0).unwrap();
        assert!(moment_check(&exp, 4, 3).unwrap().finite);
        let heavy = moment_check(&TimeDistribution::pareto(0.4, 1.0).unwrap(), 4, 2).unwrap();
        assert!(!heavy.finite);
        assert!(heavy.witness.contains("1.6"));
        assert!(moment_check(&TimeDistribution::pareto(0.6, 1.0).unwrap(), 4, 2).unwrap().finite);
        // boundary: k alpha = d is infinite
        assert!(!moment_check(&TimeDistribution::pareto(0.5, 1.0).unwrap(), 4, 2).unwrap().finite);
    }

    #[test]
    fn bernoulli_atoms_are_exact() {
        let atoms = TimeDistribution::bernoulli(0.5).unwrap().atoms().unwrap();
        let half = BigRational::new(1.into(), 2.into());
        assert_eq!(atoms, vec![(0.0, half.clone()), (1.0, half)]);
        assert!(TimeDistribution::exponential(1.0).unwrap().atoms().is_none());
    }
}
