//! Estimators and replication-level statistics: treatment-effect samples,
//! unbiased variances, Student-t confidence intervals, and the centered
//! arm-sum diagnostic used by the coupling checks.

use thiserror::Error;

use crate::designs::{ArRunRecord, Trajectory};
use crate::env::{ArmId, BanditInstance};

pub mod special;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("trajectories have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} samples, got {got}")]
    NotEnoughSamples { needed: usize, got: usize },
    #[error("probability must be in (0, 1), got {0}")]
    BadProbability(f64),
    #[error("degrees of freedom must be >= 1, got {0}")]
    BadDegreesOfFreedom(i64),
    #[error("confidence level must be in (0, 1), got {0}")]
    BadLevel(f64),
}

/// Treatment-minus-control cumulative reward difference.
pub fn theta_hat(traj1: &Trajectory, traj0: &Trajectory) -> Result<f64, StatsError> {
    if traj1.len() != traj0.len() {
        return Err(StatsError::LengthMismatch(traj1.len(), traj0.len()));
    }
    Ok(traj1.total_reward() - traj0.total_reward())
}

/// Output of one run of any design, reduced to the quantities the
/// replication statistics consume.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub theta: f64,
    pub reward_sum0: f64,
    pub reward_sum1: f64,
    pub n_env: u64,
    pub n_replay: u64,
    pub pulls0: Vec<u32>,
    pub pulls1: Vec<u32>,
}

impl RunOutput {
    pub fn from_naive(traj0: &Trajectory, traj1: &Trajectory, k: u32) -> Self {
        let horizon = traj0.len() as u64;
        Self {
            theta: traj1.total_reward() - traj0.total_reward(),
            reward_sum0: traj0.total_reward(),
            reward_sum1: traj1.total_reward(),
            n_env: 2 * horizon,
            n_replay: 0,
            pulls0: traj0.pull_counts(k),
            pulls1: traj1.pull_counts(k),
        }
    }

    pub fn from_ar(record: &ArRunRecord) -> Self {
        Self {
            theta: record.traj1.total_reward() - record.traj0.total_reward(),
            reward_sum0: record.traj0.total_reward(),
            reward_sum1: record.traj1.total_reward(),
            n_env: record.n_env,
            n_replay: record.n_replay,
            pulls0: record.pulls0.clone(),
            pulls1: record.pulls1.clone(),
        }
    }

    /// Shared-stack runs: environment interactions are the stack cells read
    /// by at least one policy, replays the cells read by both.
    pub fn from_shared_stack(traj0: &Trajectory, traj1: &Trajectory, k: u32) -> Self {
        let pulls0 = traj0.pull_counts(k);
        let pulls1 = traj1.pull_counts(k);
        let (n_env, n_replay) = crate::designs::interaction_counts(&pulls0, &pulls1)
            .expect("both trajectories cover the same horizon");
        Self {
            theta: traj1.total_reward() - traj0.total_reward(),
            reward_sum0: traj0.total_reward(),
            reward_sum1: traj1.total_reward(),
            n_env,
            n_replay,
            pulls0,
            pulls1,
        }
    }
}

/// Monte Carlo aggregates over M replications of one design.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationSummary {
    pub m: usize,
    pub theta_samples: Vec<f64>,
    pub mean: f64,
    /// Unbiased sample variance (divisor M - 1); `None` when M < 2.
    pub sample_var: Option<f64>,
    pub n_env_samples: Vec<u64>,
    pub n_replay_samples: Vec<u64>,
    /// `pull_samples[i][a]` collects policy i's pull counts of arm a+1
    /// across runs.
    pub pull_samples: [Vec<Vec<u32>>; 2],
}

impl ReplicationSummary {
    pub fn mean_n_env(&self) -> f64 {
        mean_u64(&self.n_env_samples)
    }

    pub fn mean_n_replay(&self) -> f64 {
        mean_u64(&self.n_replay_samples)
    }
}

fn mean_u64(xs: &[u64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().map(|&x| x as f64).sum::<f64>() / xs.len() as f64
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance, `None` when fewer than two samples.
pub fn sample_variance(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs);
    Some(xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64)
}

/// Collapse per-run outputs into replication aggregates.
pub fn summarize(samples: &[RunOutput]) -> Result<ReplicationSummary, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::NotEnoughSamples { needed: 1, got: 0 });
    }
    let theta_samples: Vec<f64> = samples.iter().map(|s| s.theta).collect();
    let k = samples[0].pulls0.len();
    let mut pull_samples = [Vec::with_capacity(k), Vec::with_capacity(k)];
    for (i, accessor) in [
        |s: &RunOutput| s.pulls0.clone(),
        |s: &RunOutput| s.pulls1.clone(),
    ]
    .iter()
    .enumerate()
    {
        pull_samples[i] = samples.iter().map(accessor).collect();
    }
    Ok(ReplicationSummary {
        m: samples.len(),
        mean: mean(&theta_samples),
        sample_var: sample_variance(&theta_samples),
        n_env_samples: samples.iter().map(|s| s.n_env).collect(),
        n_replay_samples: samples.iter().map(|s| s.n_replay).collect(),
        pull_samples,
        theta_samples,
    })
}

/// Per-arm pull-count mean and unbiased variance for one policy.
pub fn pull_count_moments(pulls: &[Vec<u32>]) -> (Vec<f64>, Vec<f64>) {
    if pulls.is_empty() {
        return (Vec::new(), Vec::new());
    }
    let k = pulls[0].len();
    let mut means = Vec::with_capacity(k);
    let mut vars = Vec::with_capacity(k);
    for a in 0..k {
        let xs: Vec<f64> = pulls.iter().map(|run| run[a] as f64).collect();
        means.push(mean(&xs));
        vars.push(sample_variance(&xs).unwrap_or(0.0));
    }
    (means, vars)
}

/// Quantile of the Student t distribution: the x with `CDF_t(x; df) = p`.
///
/// Inverted by bisection on the regularized-incomplete-beta CDF; accurate to
/// well below 1e-8 in the returned quantile.
pub fn t_quantile(p: f64, df: u32) -> Result<f64, StatsError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(StatsError::BadProbability(p));
    }
    if df < 1 {
        return Err(StatsError::BadDegreesOfFreedom(df as i64));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    // symmetry: solve in the upper tail
    if p < 0.5 {
        return Ok(-t_quantile(1.0 - p, df)?);
    }
    let cdf = |x: f64| special::student_t_cdf(x, df as f64);
    // expand the bracket until it encloses p
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while cdf(hi) < p {
        hi *= 2.0;
        if hi > 1e300 {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * (1.0 + hi.abs()) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Two-sided Student-t confidence interval around the replication mean.
pub fn confidence_interval(
    summary: &ReplicationSummary,
    alpha: f64,
) -> Result<(f64, f64), StatsError> {
    if summary.m < 2 {
        return Err(StatsError::NotEnoughSamples { needed: 2, got: summary.m });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::BadLevel(alpha));
    }
    let var = summary.sample_var.expect("m >= 2");
    let t = t_quantile(1.0 - alpha / 2.0, summary.m as u32 - 1)?;
    let half = t * (var / summary.m as f64).sqrt();
    Ok((summary.mean - half, summary.mean + half))
}

/// Sum over the arm's pulls of `reward - mean(arm)`; zero when never pulled.
pub fn centered_arm_sum(trajectory: &Trajectory, instance: &BanditInstance, arm: ArmId) -> f64 {
    let mu = match instance.arm(arm) {
        Ok(dist) => dist.mean(),
        Err(_) => return 0.0,
    };
    trajectory
        .steps()
        .iter()
        .filter(|s| s.arm == arm)
        .map(|s| s.reward - mu)
        .sum()
}

/// Empirical variances of the naive and replay estimators over aligned
/// replications.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceReport {
    /// Var of the per-run differences `reward_sum1 - reward_sum0`.
    pub var_b: f64,
    /// Same quantity via the independence decomposition
    /// `Var(sum0) + Var(sum1)`; must agree with `var_b` up to Monte Carlo
    /// error in the naive design.
    pub var_b_marginal_sum: f64,
    pub var_ar: f64,
    pub var_b_over_t: f64,
    pub var_ar_over_t: f64,
}

/// `samples0` / `samples1`: per-run cumulative rewards of the two policies
/// in the naive design (aligned by run); `samples_ar`: replay-estimator
/// samples.
pub fn variance_report(
    samples0: &[f64],
    samples1: &[f64],
    samples_ar: &[f64],
    horizon: u32,
) -> Result<VarianceReport, StatsError> {
    if samples0.len() != samples1.len() {
        return Err(StatsError::LengthMismatch(samples0.len(), samples1.len()));
    }
    if samples0.len() < 2 || samples_ar.len() < 2 {
        return Err(StatsError::NotEnoughSamples {
            needed: 2,
            got: samples0.len().min(samples_ar.len()),
        });
    }
    let diffs: Vec<f64> = samples1.iter().zip(samples0).map(|(a, b)| a - b).collect();
    let var_b = sample_variance(&diffs).expect("len >= 2");
    let var_b_marginal_sum =
        sample_variance(samples0).expect("len >= 2") + sample_variance(samples1).expect("len >= 2");
    let var_ar = sample_variance(samples_ar).expect("len >= 2");
    let t = horizon as f64;
    Ok(VarianceReport {
        var_b,
        var_b_marginal_sum,
        var_ar,
        var_b_over_t: var_b / t,
        var_ar_over_t: var_ar / t,
    })
}
