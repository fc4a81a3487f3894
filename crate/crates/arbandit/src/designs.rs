//! Experiment mechanics: the three ways of running a control policy `pi0`
//! against a treatment policy `pi1` on one instance for `T` periods.
//!
//! * [`run_naive`] — both policies interact with the environment
//!   independently (2T fresh draws).
//! * [`run_ar`] — artificial replay: `pi0` runs first; `pi1` then reuses
//!   `pi0`'s logged rewards for matching arms (earliest unused first) and
//!   only queries the environment when the log is exhausted for that arm.
//! * [`run_shared_stack`] — both policies read from the same pre-drawn
//!   per-arm reward stacks, never interfering; distributionally equivalent
//!   to the replay design, and the analytical device behind its variance
//!   reduction.
//!
//! Replay bookkeeping uses per-arm FIFO queues of `pi0`'s rewards; popping
//! the head is exactly the earliest-unused-index rule.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{sample_reward, ArmId, BanditInstance, EnvError};
use crate::policies::{select, update, PolicyError, PolicySpec, PolicyState};
use crate::streams::{PolicyStream, RunStreams};

#[derive(Debug, Error, PartialEq)]
pub enum DesignError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("pull-count vectors disagree: {0}")]
    PullCountMismatch(String),
}

/// The three experiment mechanics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    Naive,
    Ar,
    SharedStack,
}

impl Design {
    /// Stable stream tag; part of the seed derivation, never renumber.
    pub fn tag(self) -> u64 {
        match self {
            Self::Naive => 1,
            Self::Ar => 2,
            Self::SharedStack => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Naive => "naive",
            Self::Ar => "ar",
            Self::SharedStack => "shared_stack",
        }
    }
}

/// Where a recorded reward came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RewardSource {
    /// Fresh draw from the environment (stack reads count as environment).
    Environment,
    /// Copied from the control policy's logged trajectory.
    Replay,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub arm: ArmId,
    pub reward: f64,
    pub source: RewardSource,
}

/// Ordered action-reward sequence of one policy over the horizon.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    steps: Vec<Step>,
}

impl Trajectory {
    pub fn from_steps(steps: Vec<Step>) -> Self {
        Self { steps }
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }

    /// Per-arm pull counts at the end of the trajectory.
    pub fn pull_counts(&self, k: u32) -> Vec<u32> {
        let mut counts = vec![0u32; k as usize];
        for s in &self.steps {
            counts[s.arm.index()] += 1;
        }
        counts
    }

    pub fn replay_steps(&self) -> usize {
        self.steps.iter().filter(|s| s.source == RewardSource::Replay).count()
    }
}

/// Pulls of `arm` within the first `t` periods (0 <= t <= T).
pub fn count_pulls(trajectory: &Trajectory, arm: ArmId, t: u32) -> u32 {
    trajectory
        .steps
        .iter()
        .take(t as usize)
        .filter(|s| s.arm == arm)
        .count() as u32
}

/// `(sum of per-arm maxima, sum of per-arm minima)` of two pull-count
/// vectors: the environment-interaction and replay counts implied by a pair
/// of coupled trajectories.
pub fn interaction_counts(pulls0: &[u32], pulls1: &[u32]) -> Result<(u64, u64), DesignError> {
    if pulls0.len() != pulls1.len() {
        return Err(DesignError::PullCountMismatch(format!(
            "lengths {} vs {}",
            pulls0.len(),
            pulls1.len()
        )));
    }
    let (t0, t1): (u64, u64) = (
        pulls0.iter().map(|&n| u64::from(n)).sum(),
        pulls1.iter().map(|&n| u64::from(n)).sum(),
    );
    if t0 != t1 {
        return Err(DesignError::PullCountMismatch(format!("sums {t0} vs {t1}")));
    }
    let mut n_env = 0u64;
    let mut n_replay = 0u64;
    for (&a, &b) in pulls0.iter().zip(pulls1) {
        n_env += u64::from(a.max(b));
        n_replay += u64::from(a.min(b));
    }
    Ok((n_env, n_replay))
}

/// One replay-coupled run: both trajectories plus the interaction counters.
#[derive(Debug, Clone, PartialEq)]
pub struct ArRunRecord {
    pub traj0: Trajectory,
    pub traj1: Trajectory,
    /// Real-environment interactions across both phases.
    pub n_env: u64,
    /// Rewards copied from the control policy's log.
    pub n_replay: u64,
    pub pulls0: Vec<u32>,
    pub pulls1: Vec<u32>,
}

/// Pre-drawn per-arm reward stacks plus how deep each policy read.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardStacks {
    /// `stacks[a][n]` is the (n+1)-th reward of arm a+1.
    pub stacks: Vec<Vec<f64>>,
    /// Revealed depth per policy per arm; equals that policy's pull counts.
    pub revealed: [Vec<u32>; 2],
}

impl RewardStacks {
    /// Cells read by at least one policy / by both policies.
    pub fn read_counts(&self) -> (u64, u64) {
        interaction_counts(&self.revealed[0], &self.revealed[1])
            .expect("revealed depths are pull counts and sum to T")
    }
}

/// Runs one policy against the live environment for `horizon` periods.
pub(crate) fn run_single(
    spec: &PolicySpec,
    instance: &BanditInstance,
    horizon: u32,
    rewards: &mut rand_chacha::ChaCha12Rng,
    policy: PolicyStream,
) -> Result<Trajectory, DesignError> {
    let mut state = PolicyState::new(instance.k(), horizon);
    let mut steps = Vec::with_capacity(horizon as usize);
    for t in 1..=horizon {
        let arm = select_with_stream(spec, &state, t, policy)?;
        let reward = sample_reward(instance, arm, rewards)?;
        update(spec, &mut state, arm, reward)?;
        steps.push(Step { arm, reward, source: RewardSource::Environment });
    }
    Ok(Trajectory::from_steps(steps))
}

/// Period-`t` selection against the policy's lazily opened period stream:
/// a policy that consumes nothing this period costs no stream setup.
pub(crate) fn select_with_stream(
    spec: &PolicySpec,
    state: &PolicyState,
    t: u32,
    policy: PolicyStream,
) -> Result<ArmId, DesignError> {
    let mut rng = crate::streams::LazyPeriodRng::new(policy, t);
    Ok(select(spec, state, t, &mut rng)?)
}

/// Independent-runs design: each policy samples the environment on every
/// period, for `2 * horizon` environment interactions total.
pub fn run_naive(
    pi0: &PolicySpec,
    pi1: &PolicySpec,
    instance: &BanditInstance,
    horizon: u32,
    streams: &mut RunStreams,
) -> Result<(Trajectory, Trajectory), DesignError> {
    if horizon == 0 {
        return Err(DesignError::ZeroHorizon);
    }
    let traj0 = run_single(pi0, instance, horizon, &mut streams.rewards, streams.policy0)?;
    let traj1 = run_single(pi1, instance, horizon, &mut streams.rewards, streams.policy1)?;
    Ok((traj0, traj1))
}

/// Artificial-replay design.
///
/// Phase 1 deploys `pi0` against the environment. Phase 2 deploys `pi1`;
/// whenever `pi1` selects an arm for which `pi0`'s log still holds an unused
/// observation, the earliest unused one is replayed, otherwise a fresh
/// environment draw is taken. Phase 2 may replay observations `pi0` made at
/// later periods than `pi1`'s current one; the log is searched in full.
pub fn run_ar(
    pi0: &PolicySpec,
    pi1: &PolicySpec,
    instance: &BanditInstance,
    horizon: u32,
    streams: &mut RunStreams,
) -> Result<ArRunRecord, DesignError> {
    if horizon == 0 {
        return Err(DesignError::ZeroHorizon);
    }
    let k = instance.k();
    let traj0 = run_single(pi0, instance, horizon, &mut streams.rewards, streams.policy0)?;

    // earliest-unused-first == FIFO over pi0's per-arm reward sequences
    let mut unused: Vec<VecDeque<f64>> = vec![VecDeque::new(); k as usize];
    for step in traj0.steps() {
        unused[step.arm.index()].push_back(step.reward);
    }

    let mut state = PolicyState::new(k, horizon);
    let mut steps = Vec::with_capacity(horizon as usize);
    let mut env_phase2 = 0u64;
    for t in 1..=horizon {
        let arm = select_with_stream(pi1, &state, t, streams.policy1)?;
        let (reward, source) = match unused[arm.index()].pop_front() {
            Some(r) => (r, RewardSource::Replay),
            None => {
                env_phase2 += 1;
                (sample_reward(instance, arm, &mut streams.rewards)?, RewardSource::Environment)
            }
        };
        update(pi1, &mut state, arm, reward)?;
        steps.push(Step { arm, reward, source });
    }
    let traj1 = Trajectory::from_steps(steps);

    let pulls0 = traj0.pull_counts(k);
    let pulls1 = traj1.pull_counts(k);
    let n_env = u64::from(horizon) + env_phase2;
    let n_replay = u64::from(horizon) - env_phase2;
    debug_assert_eq!(
        (n_env, n_replay),
        interaction_counts(&pulls0, &pulls1).expect("both phases run the full horizon"),
        "direct tally disagrees with the max/min pull-count formulas"
    );
    Ok(ArRunRecord { traj0, traj1, n_env, n_replay, pulls0, pulls1 })
}

/// Swapped-order replay run: `pi1` is deployed first and `pi0` replays on
/// its log. The returned record keeps the role slots of the arguments
/// (`traj0` is still `pi0`'s trajectory), so the treatment-minus-control
/// estimator needs no external sign adjustment.
pub fn run_ar_swapped(
    pi0: &PolicySpec,
    pi1: &PolicySpec,
    instance: &BanditInstance,
    horizon: u32,
    streams: &mut RunStreams,
) -> Result<ArRunRecord, DesignError> {
    let mut swapped = streams.clone().swap_policies();
    let rec = run_ar(pi1, pi0, instance, horizon, &mut swapped)?;
    *streams = swapped.swap_policies();
    Ok(ArRunRecord {
        traj0: rec.traj1,
        traj1: rec.traj0,
        n_env: rec.n_env,
        n_replay: rec.n_replay,
        pulls0: rec.pulls1,
        pulls1: rec.pulls0,
    })
}

/// Shared-reward-stack simulation: pre-draws a K x T reward matrix, then
/// lets each policy (driven by its own randomness) reveal its n-th pull of
/// arm `a` as `stacks[a][n]`. The policies never interfere.
pub fn run_shared_stack(
    pi0: &PolicySpec,
    pi1: &PolicySpec,
    instance: &BanditInstance,
    horizon: u32,
    streams: &mut RunStreams,
) -> Result<(Trajectory, Trajectory, RewardStacks), DesignError> {
    if horizon == 0 {
        return Err(DesignError::ZeroHorizon);
    }
    let k = instance.k() as usize;
    let mut stacks = Vec::with_capacity(k);
    for arm in instance.arms() {
        let column: Vec<f64> =
            (0..horizon).map(|_| arm.sample(&mut streams.rewards)).collect();
        stacks.push(column);
    }

    let run_on_stack =
        |spec: &PolicySpec, policy: PolicyStream| -> Result<Trajectory, DesignError> {
            let mut state = PolicyState::new(k as u32, horizon);
            let mut steps = Vec::with_capacity(horizon as usize);
            for t in 1..=horizon {
                let arm = select_with_stream(spec, &state, t, policy)?;
                let depth = state.pull_count(arm) as usize;
                let reward = stacks[arm.index()][depth];
                update(spec, &mut state, arm, reward)?;
                steps.push(Step { arm, reward, source: RewardSource::Environment });
            }
            Ok(Trajectory::from_steps(steps))
        };

    let traj0 = run_on_stack(pi0, streams.policy0)?;
    let traj1 = run_on_stack(pi1, streams.policy1)?;
    let revealed = [traj0.pull_counts(k as u32), traj1.pull_counts(k as u32)];
    Ok((traj0, traj1, RewardStacks { stacks, revealed }))
}
