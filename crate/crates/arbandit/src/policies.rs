//! Bandit policies as history-dependent stochastic kernels.
//!
//! A policy is a [`PolicySpec`] (immutable parameters) plus a
//! [`PolicyState`] (per-arm sufficient statistics). `select` draws the next
//! arm, `update` folds an observed reward into the state, and
//! `action_distribution` returns the exact kernel for the policies that have
//! one in closed form.
//!
//! Conventions shared by every policy:
//!
//! * Warm-up: while any arm is unpulled, the lowest-index unpulled arm is
//!   selected. Upper-confidence policies force this anyway (an unpulled
//!   arm's index is infinite); the randomized policies follow the same rule
//!   so that all policies share one warm-up behavior.
//! * Post-warm-up argmax ties break uniformly at random among the tied
//!   arms, consuming the policy's randomness stream only when a tie
//!   actually occurs. A policy whose scores never tie consumes nothing.
//! * Randomized policies must be fed a stream that is independent of all
//!   reward draws; see [`crate::streams`].

use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use thiserror::Error;

use crate::env::ArmId;

#[derive(Debug, Error, PartialEq)]
pub enum PolicyError {
    #[error("arm index {arm} out of range 1..={k}")]
    ArmOutOfRange { arm: u32, k: u32 },
    #[error("period {t} does not follow state at t={state_t}")]
    PeriodMismatch { t: u32, state_t: u32 },
    #[error("Bernoulli Thompson sampling requires rewards in [0, 1], got {reward}")]
    RewardOutOfRange { reward: f64 },
    #[error("{kind} has no closed-form action kernel")]
    UnsupportedKernel { kind: &'static str },
    #[error("invalid policy parameter: {0}")]
    InvalidParameter(String),
}

/// Confidence parameter of the fixed-confidence UCB policy: either explicit,
/// or derived from the horizon as `T^-d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UcbDeltaParam {
    Explicit(f64),
    HorizonPower(f64),
}

/// Immutable policy description.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicySpec {
    /// Index `mean + sqrt(alpha * ln t / n)`.
    Ucb1 { alpha: f64 },
    /// Index `mean + sqrt(2 * ln(1/delta) / n)`.
    UcbDelta { delta: UcbDeltaParam },
    /// Thompson sampling with per-arm Beta(alpha0, beta0) priors on 0/1 rewards.
    TsBernoulli { alpha0: f64, beta0: f64 },
    /// Thompson sampling with per-arm Normal(prior_mean, prior_var) priors
    /// and known observation variance.
    TsGaussian { prior_mean: f64, prior_var: f64, obs_var: f64 },
    /// With probability eps pick uniformly among all arms, otherwise the
    /// arm with the best empirical mean.
    EpsGreedy { eps: f64 },
}

impl PolicySpec {
    pub fn ucb1(alpha: f64) -> Result<Self, PolicyError> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(PolicyError::InvalidParameter(format!(
                "ucb1 alpha must be positive, got {alpha}"
            )));
        }
        Ok(Self::Ucb1 { alpha })
    }

    pub fn ucb_delta_explicit(delta: f64) -> Result<Self, PolicyError> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(PolicyError::InvalidParameter(format!(
                "ucb_delta delta must be in (0, 1), got {delta}"
            )));
        }
        Ok(Self::UcbDelta { delta: UcbDeltaParam::Explicit(delta) })
    }

    pub fn ucb_delta_horizon(d: f64) -> Result<Self, PolicyError> {
        if !d.is_finite() || d < 2.0 {
            return Err(PolicyError::InvalidParameter(format!(
                "ucb_delta d must be >= 2, got {d}"
            )));
        }
        Ok(Self::UcbDelta { delta: UcbDeltaParam::HorizonPower(d) })
    }

    pub fn ts_bernoulli(alpha0: f64, beta0: f64) -> Result<Self, PolicyError> {
        if !(alpha0 > 0.0 && beta0 > 0.0) {
            return Err(PolicyError::InvalidParameter(format!(
                "ts_bernoulli prior parameters must be positive, got ({alpha0}, {beta0})"
            )));
        }
        Ok(Self::TsBernoulli { alpha0, beta0 })
    }

    pub fn ts_gaussian(prior_mean: f64, prior_var: f64, obs_var: f64) -> Result<Self, PolicyError> {
        if !(prior_var > 0.0 && obs_var > 0.0) {
            return Err(PolicyError::InvalidParameter(format!(
                "ts_gaussian variances must be positive, got ({prior_var}, {obs_var})"
            )));
        }
        Ok(Self::TsGaussian { prior_mean, prior_var, obs_var })
    }

    pub fn eps_greedy(eps: f64) -> Result<Self, PolicyError> {
        if !(0.0..=1.0).contains(&eps) {
            return Err(PolicyError::InvalidParameter(format!(
                "eps_greedy eps must be in [0, 1], got {eps}"
            )));
        }
        Ok(Self::EpsGreedy { eps })
    }

    /// True when the per-period action kernel has an exact closed form.
    pub fn has_exact_kernel(&self) -> bool {
        !matches!(self, Self::TsBernoulli { .. } | Self::TsGaussian { .. })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::Ucb1 { .. } => "ucb1",
            Self::UcbDelta { .. } => "ucb_delta",
            Self::TsBernoulli { .. } => "ts_bernoulli",
            Self::TsGaussian { .. } => "ts_gaussian",
            Self::EpsGreedy { .. } => "eps_greedy",
        }
    }
}

/// Per-run policy memory: period counter and per-arm pull counts / reward
/// sums. Posterior parameters for the Thompson policies are derived from
/// `(pulls, reward_sums)` on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyState {
    horizon: u32,
    t: u32,
    pulls: Vec<u32>,
    reward_sums: Vec<f64>,
}

impl PolicyState {
    pub fn new(k: u32, horizon: u32) -> Self {
        Self {
            horizon,
            t: 0,
            pulls: vec![0; k as usize],
            reward_sums: vec![0.0; k as usize],
        }
    }

    pub fn k(&self) -> u32 {
        self.pulls.len() as u32
    }

    /// Completed periods; always equals the sum of the pull counts.
    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn pulls(&self) -> &[u32] {
        &self.pulls
    }

    pub fn reward_sums(&self) -> &[f64] {
        &self.reward_sums
    }

    pub fn pull_count(&self, arm: ArmId) -> u32 {
        self.pulls[arm.index()]
    }

    fn check_arm(&self, arm: ArmId) -> Result<(), PolicyError> {
        if arm.0 == 0 || arm.0 > self.k() {
            return Err(PolicyError::ArmOutOfRange { arm: arm.0, k: self.k() });
        }
        Ok(())
    }

    fn first_unpulled(&self) -> Option<usize> {
        self.pulls.iter().position(|&n| n == 0)
    }

    fn empirical_mean(&self, i: usize) -> f64 {
        self.reward_sums[i] / self.pulls[i] as f64
    }
}

/// Argmax over `scores(0..k)`, uniform among exactly tied maxima. Draws
/// from `rng` only when at least two arms tie.
fn argmax_random_ties(
    k: usize,
    scores: impl Fn(usize) -> f64,
    rng: &mut impl Rng,
) -> usize {
    let mut best = 0usize;
    let mut best_score = f64::NEG_INFINITY;
    let mut ties = 0u32;
    for i in 0..k {
        let s = scores(i);
        if s > best_score {
            best_score = s;
            best = i;
            ties = 1;
        } else if s == best_score {
            ties += 1;
        }
    }
    if ties > 1 {
        let mut pick = rng.random_range(0..ties);
        for i in 0..k {
            if scores(i) == best_score {
                if pick == 0 {
                    return i;
                }
                pick -= 1;
            }
        }
    }
    best
}

/// Maximizers of `scores(0..k)` get probability `1/m` each.
fn argmax_tie_probs(k: usize, scores: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut best_score = f64::NEG_INFINITY;
    for i in 0..k {
        best_score = best_score.max(scores(i));
    }
    let tied: Vec<usize> = (0..k).filter(|&i| scores(i) == best_score).collect();
    let mut probs = vec![0.0; k];
    for &i in &tied {
        probs[i] = 1.0 / tied.len() as f64;
    }
    probs
}

fn ucb_delta_value(param: UcbDeltaParam, horizon: u32) -> f64 {
    match param {
        UcbDeltaParam::Explicit(delta) => delta,
        UcbDeltaParam::HorizonPower(d) => (horizon as f64).powf(-d),
    }
}

/// Upper-confidence index of one arm, shared by both UCB variants.
fn ucb_index(state: &PolicyState, i: usize, bonus_scale: f64) -> f64 {
    state.empirical_mean(i) + (bonus_scale / state.pulls[i] as f64).sqrt()
}

/// Draw the arm for period `t` (1-based; requires `state.t == t - 1`).
///
/// Stream consumption: the UCB variants draw nothing unless their indices
/// tie exactly; Thompson sampling draws K posterior values; eps-greedy
/// draws one uniform plus, when exploring, one uniform arm choice. Warm-up
/// periods are deterministic for every policy.
pub fn select(
    spec: &PolicySpec,
    state: &PolicyState,
    t: u32,
    rng: &mut impl Rng,
) -> Result<ArmId, PolicyError> {
    if state.t + 1 != t {
        return Err(PolicyError::PeriodMismatch { t, state_t: state.t });
    }
    if let Some(i) = state.first_unpulled() {
        return Ok(ArmId::from_index(i));
    }
    let k = state.k() as usize;
    let chosen = match *spec {
        PolicySpec::Ucb1 { alpha } => {
            let scale = alpha * (t as f64).ln();
            argmax_random_ties(k, |i| ucb_index(state, i, scale), rng)
        }
        PolicySpec::UcbDelta { delta } => {
            let scale = 2.0 * (1.0 / ucb_delta_value(delta, state.horizon)).ln();
            argmax_random_ties(k, |i| ucb_index(state, i, scale), rng)
        }
        PolicySpec::TsBernoulli { alpha0, beta0 } => {
            // K posterior draws, consumed in arm order
            let draws: Vec<f64> = (0..k)
                .map(|i| {
                    let successes = state.reward_sums[i];
                    let failures = state.pulls[i] as f64 - successes;
                    // prior parameters positive and counts nonnegative
                    Beta::new(alpha0 + successes, beta0 + failures).unwrap().sample(rng)
                })
                .collect();
            argmax_random_ties(k, |i| draws[i], rng)
        }
        PolicySpec::TsGaussian { prior_mean, prior_var, obs_var } => {
            let draws: Vec<f64> = (0..k)
                .map(|i| {
                    let (m, v) = gaussian_posterior(
                        prior_mean,
                        prior_var,
                        obs_var,
                        state.pulls[i],
                        state.reward_sums[i],
                    );
                    let z: f64 = StandardNormal.sample(rng);
                    m + v.sqrt() * z
                })
                .collect();
            argmax_random_ties(k, |i| draws[i], rng)
        }
        PolicySpec::EpsGreedy { eps } => {
            let u: f64 = rng.random();
            if u < eps {
                rng.random_range(0..k)
            } else {
                argmax_random_ties(k, |i| state.empirical_mean(i), rng)
            }
        }
    };
    Ok(ArmId::from_index(chosen))
}

/// Posterior (mean, variance) of a Gaussian mean with Normal prior and known
/// observation variance, given `n` observations summing to `s`.
pub fn gaussian_posterior(
    prior_mean: f64,
    prior_var: f64,
    obs_var: f64,
    n: u32,
    s: f64,
) -> (f64, f64) {
    let precision = 1.0 / prior_var + n as f64 / obs_var;
    let mean = (prior_mean / prior_var + s / obs_var) / precision;
    (mean, 1.0 / precision)
}

/// Fold the observed reward into the state (pulled arm only).
pub fn update(
    spec: &PolicySpec,
    state: &mut PolicyState,
    arm: ArmId,
    reward: f64,
) -> Result<(), PolicyError> {
    state.check_arm(arm)?;
    if let PolicySpec::TsBernoulli { .. } = spec {
        if !(0.0..=1.0).contains(&reward) {
            return Err(PolicyError::RewardOutOfRange { reward });
        }
    }
    state.t += 1;
    state.pulls[arm.index()] += 1;
    state.reward_sums[arm.index()] += reward;
    Ok(())
}

/// Exact action kernel for period `t`, for the policies that have one.
///
/// Returns a probability vector over arms (1-based order). Thompson
/// sampling is rejected: its kernel probabilities require integrating the
/// posterior draws.
pub fn action_distribution(
    spec: &PolicySpec,
    state: &PolicyState,
    t: u32,
) -> Result<Vec<f64>, PolicyError> {
    if state.t + 1 != t {
        return Err(PolicyError::PeriodMismatch { t, state_t: state.t });
    }
    if !spec.has_exact_kernel() {
        return Err(PolicyError::UnsupportedKernel { kind: spec.kind_name() });
    }
    let k = state.k() as usize;
    let mut probs = vec![0.0; k];
    if let Some(i) = state.first_unpulled() {
        probs[i] = 1.0;
        return Ok(probs);
    }
    match *spec {
        PolicySpec::Ucb1 { alpha } => {
            let scale = alpha * (t as f64).ln();
            probs = argmax_tie_probs(k, |i| ucb_index(state, i, scale));
        }
        PolicySpec::UcbDelta { delta } => {
            let scale = 2.0 * (1.0 / ucb_delta_value(delta, state.horizon)).ln();
            probs = argmax_tie_probs(k, |i| ucb_index(state, i, scale));
        }
        PolicySpec::EpsGreedy { eps } => {
            let greedy = argmax_tie_probs(k, |i| state.empirical_mean(i));
            for (p, g) in probs.iter_mut().zip(&greedy) {
                *p = eps / k as f64 + (1.0 - eps) * g;
            }
        }
        PolicySpec::TsBernoulli { .. } | PolicySpec::TsGaussian { .. } => unreachable!(),
    }
    Ok(probs)
}
