//! Bandit environments: arm reward distributions and instance-level
//! quantities (optimal arm, gaps, regret).
//!
//! Arm indices are 1-based everywhere a caller can see them (trajectories,
//! config files, CSV); vectors returned per arm are ordered `arm 1 ..= K`.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::designs::Trajectory;

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("arm index {arm} out of range 1..={k}")]
    ArmOutOfRange { arm: u32, k: u32 },
    #[error("invalid distribution parameter: {0}")]
    InvalidParameter(String),
    #[error("an instance needs at least one arm")]
    EmptyInstance,
}

/// 1-based arm index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ArmId(pub u32);

impl ArmId {
    /// Position in 0-based per-arm vectors.
    pub fn index(self) -> usize {
        (self.0 - 1) as usize
    }

    pub fn from_index(index: usize) -> Self {
        ArmId(index as u32 + 1)
    }
}

impl std::fmt::Display for ArmId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A single arm's reward distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArmDistribution {
    Bernoulli { p: f64 },
    Gaussian { mean: f64, variance: f64 },
}

impl ArmDistribution {
    pub fn bernoulli(p: f64) -> Result<Self, EnvError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(EnvError::InvalidParameter(format!(
                "Bernoulli p must be in [0, 1], got {p}"
            )));
        }
        Ok(Self::Bernoulli { p })
    }

    pub fn gaussian(mean: f64, variance: f64) -> Result<Self, EnvError> {
        if !variance.is_finite() || variance <= 0.0 {
            return Err(EnvError::InvalidParameter(format!(
                "Gaussian variance must be positive, got {variance}"
            )));
        }
        if !mean.is_finite() {
            return Err(EnvError::InvalidParameter(format!(
                "Gaussian mean must be finite, got {mean}"
            )));
        }
        Ok(Self::Gaussian { mean, variance })
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Bernoulli { p } => p,
            Self::Gaussian { mean, .. } => mean,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Self::Bernoulli { p } => p * (1.0 - p),
            Self::Gaussian { variance, .. } => variance,
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            Self::Bernoulli { p } => {
                if rng.random::<f64>() < p {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Gaussian { mean, variance } => {
                // parameters are validated at construction
                Normal::new(mean, variance.sqrt()).unwrap().sample(rng)
            }
        }
    }

    pub fn is_bernoulli(&self) -> bool {
        matches!(self, Self::Bernoulli { .. })
    }
}

/// Optimal arm report. `unique` is false when the maximal mean is attained
/// by more than one arm; `arm` is then the lowest such index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OptimalArm {
    pub arm: ArmId,
    pub unique: bool,
}

/// A fixed bandit problem instance: the ordered arm distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditInstance {
    arms: Vec<ArmDistribution>,
}

impl BanditInstance {
    pub fn new(arms: Vec<ArmDistribution>) -> Result<Self, EnvError> {
        if arms.is_empty() {
            return Err(EnvError::EmptyInstance);
        }
        Ok(Self { arms })
    }

    pub fn bernoulli(means: &[f64]) -> Result<Self, EnvError> {
        Self::new(
            means
                .iter()
                .map(|&p| ArmDistribution::bernoulli(p))
                .collect::<Result<_, _>>()?,
        )
    }

    pub fn gaussian(means: &[f64], variance: f64) -> Result<Self, EnvError> {
        Self::new(
            means
                .iter()
                .map(|&m| ArmDistribution::gaussian(m, variance))
                .collect::<Result<_, _>>()?,
        )
    }

    pub fn k(&self) -> u32 {
        self.arms.len() as u32
    }

    pub fn arm(&self, arm: ArmId) -> Result<&ArmDistribution, EnvError> {
        self.check_arm(arm)?;
        Ok(&self.arms[arm.index()])
    }

    pub fn arms(&self) -> &[ArmDistribution] {
        &self.arms
    }

    pub fn means(&self) -> Vec<f64> {
        self.arms.iter().map(|a| a.mean()).collect()
    }

    pub fn variances(&self) -> Vec<f64> {
        self.arms.iter().map(|a| a.variance()).collect()
    }

    pub fn best_mean(&self) -> f64 {
        self.arms.iter().map(|a| a.mean()).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn check_arm(&self, arm: ArmId) -> Result<(), EnvError> {
        if arm.0 == 0 || arm.0 > self.k() {
            return Err(EnvError::ArmOutOfRange { arm: arm.0, k: self.k() });
        }
        Ok(())
    }

    pub fn is_bernoulli(&self) -> bool {
        self.arms.iter().all(|a| a.is_bernoulli())
    }
}

/// One independent draw from the chosen arm's reward distribution.
pub fn sample_reward(
    instance: &BanditInstance,
    arm: ArmId,
    rng: &mut impl Rng,
) -> Result<f64, EnvError> {
    Ok(instance.arm(arm)?.sample(rng))
}

/// Lowest-index maximizer of the means, flagged non-unique on ties.
pub fn optimal_arm(instance: &BanditInstance) -> OptimalArm {
    let means = instance.means();
    let mut best = 0usize;
    for (i, &m) in means.iter().enumerate().skip(1) {
        if m > means[best] {
            best = i;
        }
    }
    let unique = means
        .iter()
        .enumerate()
        .all(|(i, &m)| i == best || m < means[best]);
    OptimalArm { arm: ArmId::from_index(best), unique }
}

/// Per-arm suboptimality gaps relative to the best mean.
pub fn gaps(instance: &BanditInstance) -> Vec<f64> {
    let best = instance.best_mean();
    instance.arms.iter().map(|a| best - a.mean()).collect()
}

/// Regret of a realized trajectory: `T * best_mean - total reward`.
pub fn regret(instance: &BanditInstance, trajectory: &Trajectory) -> f64 {
    trajectory.len() as f64 * instance.best_mean() - trajectory.total_reward()
}
