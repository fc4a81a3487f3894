//! Statistical and exact oracles for the coupling claims: two-sample tests,
//! a replication battery comparing the replay design against the
//! shared-stack simulation (and the shared-stack marginals against the
//! naive design), a role-swap symmetry check, and a brute-force enumerator
//! that computes exact outcome distributions on desk-size instances.
//!
//! The module also ships deliberately broken runner variants
//! ([`SeededBug`]); they exist so the battery's sensitivity can be
//! demonstrated, never for production use.

use std::collections::{BTreeMap, VecDeque};

use rayon::prelude::*;
use thiserror::Error;

use crate::designs::{
    run_ar, run_ar_swapped, run_naive, run_shared_stack, ArRunRecord, Design, DesignError,
    RewardSource, Step, Trajectory,
};
use crate::env::{ArmId, BanditInstance};
use crate::policies::{action_distribution, update, PolicySpec, PolicyState};
use crate::stats::special::{chi_square_sf, kolmogorov_sf};
use crate::stats::RunOutput;
use crate::streams::{self, RunStreams};

#[derive(Debug, Error, PartialEq)]
pub enum EquivError {
    #[error("histograms must be nonempty and equally binned")]
    EmptyHistogram,
    #[error("two-sample KS needs at least {needed} values per side, got {got}")]
    UndersizedSample { needed: usize, got: usize },
    #[error("brute force supports K <= {max_k} and T <= {max_t}")]
    TooLargeForBruteForce { max_k: u32, max_t: u32 },
    #[error("brute force requires Bernoulli arms")]
    NonBernoulliArms,
    #[error("brute force requires policies with exact kernels, got {kind}")]
    InexactKernel { kind: &'static str },
    #[error(transparent)]
    Design(#[from] DesignError),
}

/// Outcome of one two-sample test.
#[derive(Debug, Clone, PartialEq)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    pub p_value: f64,
    /// `p_value > level`, i.e. no difference detected.
    pub pass: bool,
    pub level: f64,
    pub n_a: usize,
    pub n_b: usize,
}

impl TestReport {
    fn at_level(mut self, level: f64) -> Self {
        self.level = level;
        self.pass = self.p_value > level;
        self
    }
}

/// Two-sample chi-square test on identically binned count vectors.
///
/// Adjacent bins are pooled until every pooled bin has expected count at
/// least 5 under both margins; the statistic is summed over
/// `(observed - expected)^2 / expected` for both samples with pooled
/// expectations, on `bins - 1` degrees of freedom.
pub fn chi_square_two_sample(
    hist_a: &[u64],
    hist_b: &[u64],
) -> Result<TestReport, EquivError> {
    if hist_a.is_empty() || hist_a.len() != hist_b.len() {
        return Err(EquivError::EmptyHistogram);
    }
    let total_a: u64 = hist_a.iter().sum();
    let total_b: u64 = hist_b.iter().sum();
    if total_a == 0 || total_b == 0 {
        return Err(EquivError::EmptyHistogram);
    }
    let (ta, tb) = (total_a as f64, total_b as f64);
    // pooled-bin count needed so both expected counts reach 5
    let min_pooled = 5.0 * (ta + tb) / ta.min(tb);

    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0f64, 0.0f64);
    for (&a, &b) in hist_a.iter().zip(hist_b) {
        acc.0 += a as f64;
        acc.1 += b as f64;
        if acc.0 + acc.1 >= min_pooled {
            bins.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.0 + acc.1 > 0.0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += acc.0;
                last.1 += acc.1;
            }
            None => bins.push(acc),
        }
    }

    let df = bins.len().saturating_sub(1);
    if df == 0 {
        // everything pooled into one bin: nothing to distinguish
        return Ok(TestReport {
            name: String::new(),
            statistic: 0.0,
            p_value: 1.0,
            pass: true,
            level: 0.0,
            n_a: total_a as usize,
            n_b: total_b as usize,
        });
    }
    let mut stat = 0.0;
    for &(a, b) in &bins {
        let pooled = (a + b) / (ta + tb);
        let ea = ta * pooled;
        let eb = tb * pooled;
        stat += (a - ea).powi(2) / ea + (b - eb).powi(2) / eb;
    }
    Ok(TestReport {
        name: String::new(),
        statistic: stat,
        p_value: chi_square_sf(stat, df as f64),
        pass: true,
        level: 0.0,
        n_a: total_a as usize,
        n_b: total_b as usize,
    })
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic tail-series
/// p-value (small-sample corrected argument).
pub fn ks_two_sample(samples_a: &[f64], samples_b: &[f64]) -> Result<TestReport, EquivError> {
    const MIN: usize = 20;
    let (na, nb) = (samples_a.len(), samples_b.len());
    if na < MIN || nb < MIN {
        return Err(EquivError::UndersizedSample { needed: MIN, got: na.min(nb) });
    }
    let mut a = samples_a.to_vec();
    let mut b = samples_b.to_vec();
    a.sort_unstable_by(|x, y| x.partial_cmp(y).expect("no NaN samples"));
    b.sort_unstable_by(|x, y| x.partial_cmp(y).expect("no NaN samples"));

    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < na && j < nb {
        let x = a[i].min(b[j]);
        while i < na && a[i] <= x {
            i += 1;
        }
        while j < nb && b[j] <= x {
            j += 1;
        }
        let diff = (i as f64 / na as f64 - j as f64 / nb as f64).abs();
        if diff > d {
            d = diff;
        }
    }

    let ne = (na as f64 * nb as f64) / (na + nb) as f64;
    let sqrt_ne = ne.sqrt();
    let lambda = (sqrt_ne + 0.12 + 0.11 / sqrt_ne) * d;
    Ok(TestReport {
        name: String::new(),
        statistic: d,
        p_value: kolmogorov_sf(lambda),
        pass: true,
        level: 0.0,
        n_a: na,
        n_b: nb,
    })
}

/// Histogram a pair of integer-valued samples onto their shared support.
fn int_histograms(a: &[i64], b: &[i64]) -> (Vec<u64>, Vec<u64>) {
    let lo = a.iter().chain(b).copied().min().unwrap_or(0);
    let hi = a.iter().chain(b).copied().max().unwrap_or(0);
    let width = (hi - lo + 1) as usize;
    let mut ha = vec![0u64; width];
    let mut hb = vec![0u64; width];
    for &x in a {
        ha[(x - lo) as usize] += 1;
    }
    for &x in b {
        hb[(x - lo) as usize] += 1;
    }
    (ha, hb)
}

/// Two-sample test dispatch: chi-square on integer support when both
/// samples are integer-valued (Bernoulli summaries), KS otherwise.
fn two_sample_auto(name: &str, a: &[f64], b: &[f64], integer: bool) -> Result<TestReport, EquivError> {
    let mut report = if integer {
        let ai: Vec<i64> = a.iter().map(|&x| x.round() as i64).collect();
        let bi: Vec<i64> = b.iter().map(|&x| x.round() as i64).collect();
        let (ha, hb) = int_histograms(&ai, &bi);
        chi_square_two_sample(&ha, &hb)?
    } else {
        ks_two_sample(a, b)?
    };
    report.name = name.to_string();
    Ok(report)
}

/// Pull-count comparison reports for both policies and every arm. With
/// `joint` set, adds dispatched tests for theta and the interaction count;
/// otherwise compares per-policy cumulative-reward marginals instead.
/// Reports come back with placeholder levels; callers assign them.
pub fn compare_run_outputs(
    prefix: &str,
    a: &[RunOutput],
    b: &[RunOutput],
    k: u32,
    bernoulli: bool,
    joint: bool,
) -> Result<Vec<TestReport>, EquivError> {
    let mut reports = Vec::new();
    for policy in 0..2usize {
        for arm in 0..k as usize {
            let pa: Vec<i64> = a
                .iter()
                .map(|o| i64::from(if policy == 0 { o.pulls0[arm] } else { o.pulls1[arm] }))
                .collect();
            let pb: Vec<i64> = b
                .iter()
                .map(|o| i64::from(if policy == 0 { o.pulls0[arm] } else { o.pulls1[arm] }))
                .collect();
            let (ha, hb) = int_histograms(&pa, &pb);
            let mut r = chi_square_two_sample(&ha, &hb)?;
            r.name = format!("{prefix}:pulls:pi{policy}:arm{}", arm + 1);
            reports.push(r);
        }
    }
    if joint {
        let ta: Vec<f64> = a.iter().map(|o| o.theta).collect();
        let tb: Vec<f64> = b.iter().map(|o| o.theta).collect();
        reports.push(two_sample_auto(&format!("{prefix}:theta"), &ta, &tb, bernoulli)?);

        let ea: Vec<f64> = a.iter().map(|o| o.n_env as f64).collect();
        let eb: Vec<f64> = b.iter().map(|o| o.n_env as f64).collect();
        reports.push(two_sample_auto(&format!("{prefix}:n_env"), &ea, &eb, true)?);
    } else {
        // marginal comparison only: per-policy cumulative rewards
        for policy in 0..2usize {
            let ra: Vec<f64> = a
                .iter()
                .map(|o| if policy == 0 { o.reward_sum0 } else { o.reward_sum1 })
                .collect();
            let rb: Vec<f64> = b
                .iter()
                .map(|o| if policy == 0 { o.reward_sum0 } else { o.reward_sum1 })
                .collect();
            reports.push(two_sample_auto(
                &format!("{prefix}:reward_sum:pi{policy}"),
                &ra,
                &rb,
                bernoulli,
            )?);
        }
    }
    Ok(reports)
}

/// M replications of one design, reduced to [`RunOutput`]s; runs execute in
/// parallel but are indexed, so results never depend on scheduling.
pub fn sample_design(
    design: Design,
    pi0: &PolicySpec,
    pi1: &PolicySpec,
    instance: &BanditInstance,
    horizon: u32,
    batch_seed: u64,
    m: usize,
) -> Result<Vec<RunOutput>, DesignError> {
    (0..m)
        .into_par_iter()
        .map(|run| {
            let mut s = RunStreams::for_run(batch_seed, run as u64);
            Ok(match design {
                Design::Naive => {
                    let (t0, t1) = run_naive(pi0, pi1, instance, horizon, &mut s)?;
                    RunOutput::from_naive(&t0, &t1, instance.k())
                }
                Design::Ar => RunOutput::from_ar(&run_ar(pi0, pi1, instance, horizon, &mut s)?),
                Design::SharedStack => {
                    let (t0, t1, _) = run_shared_stack(pi0, pi1, instance, horizon, &mut s)?;
                    RunOutput::from_shared_stack(&t0, &t1, instance.k())
                }
            })
        })
        .collect()
}

/// Full equivalence battery at one horizon.
///
/// Samples M replications each of the replay design, the shared-stack
/// simulation, and the naive design, then compares (a) the replay and
/// shared-stack joint summaries (per-arm pull counts, theta, interaction
/// count) and (b) the shared-stack and naive per-policy marginals (per-arm
/// pull counts, cumulative rewards). All reports share a Bonferroni split
/// of `family_level`.
pub fn check_equivalence(
    pi0: &PolicySpec,
    pi1: &PolicySpec,
    instance: &BanditInstance,
    horizon: u32,
    m: usize,
    master_seed: u64,
    family_level: f64,
) -> Result<Vec<TestReport>, EquivError> {
    let bernoulli = instance.is_bernoulli();
    let k = instance.k();
    let seed = |tag: u64| streams::mix64(master_seed, &[streams::tag::BATCH, tag, horizon.into()]);
    let ar = sample_design(Design::Ar, pi0, pi1, instance, horizon, seed(1), m)?;
    let stack = sample_design(Design::SharedStack, pi0, pi1, instance, horizon, seed(2), m)?;
    let naive = sample_design(Design::Naive, pi0, pi1, instance, horizon, seed(3), m)?;

    let mut reports = compare_run_outputs("ar_vs_stack", &ar, &stack, k, bernoulli, true)?;
    reports.extend(compare_run_outputs("stack_vs_naive", &stack, &naive, k, bernoulli, false)?);
    let level = family_level / reports.len() as f64;
    Ok(reports.into_iter().map(|r| r.at_level(level)).collect())
}

/// Role-swap symmetry check: treatment-effect samples from the standard
/// replay order against sign-adjusted samples from the swapped order.
pub fn check_symmetry(
    pi0: &PolicySpec,
    pi1: &PolicySpec,
    instance: &BanditInstance,
    horizon: u32,
    m: usize,
    master_seed: u64,
    level: f64,
) -> Result<TestReport, EquivError> {
    let seed = |tag: u64| streams::mix64(master_seed, &[streams::tag::BATCH, tag, horizon.into()]);
    let forward = sample_design(Design::Ar, pi0, pi1, instance, horizon, seed(10), m)?;
    let swapped: Vec<RunOutput> = (0..m)
        .into_par_iter()
        .map(|run| {
            let mut s = RunStreams::for_run(seed(11), run as u64);
            run_ar_swapped(pi0, pi1, instance, horizon, &mut s).map(|rec| RunOutput::from_ar(&rec))
        })
        .collect::<Result<_, _>>()?;
    let a: Vec<f64> = forward.iter().map(|o| o.theta).collect();
    let b: Vec<f64> = swapped.iter().map(|o| o.theta).collect();
    let report = two_sample_auto("symmetry:theta", &a, &b, instance.is_bernoulli())?;
    Ok(report.at_level(level))
}

// ---------------------------------------------------------------------------
// Brute-force enumeration
// ---------------------------------------------------------------------------

/// An action-reward path, rewards restricted to 0/1.
pub type TrajKey = Vec<(u8, u8)>;
/// Exact joint outcome distribution over both policies' trajectories.
pub type OutcomeAtoms = BTreeMap<(TrajKey, TrajKey), f64>;

const BRUTE_MAX_K: u32 = 2;
const BRUTE_MAX_T: u32 = 4;

fn brute_force_guard(
    instance: &BanditInstance,
    pi0: &PolicySpec,
    pi1: &PolicySpec,
    horizon: u32,
) -> Result<(), EquivError> {
    if instance.k() > BRUTE_MAX_K || horizon > BRUTE_MAX_T || horizon == 0 {
        return Err(EquivError::TooLargeForBruteForce { max_k: BRUTE_MAX_K, max_t: BRUTE_MAX_T });
    }
    if !instance.is_bernoulli() {
        return Err(EquivError::NonBernoulliArms);
    }
    for spec in [pi0, pi1] {
        if !spec.has_exact_kernel() {
            return Err(EquivError::InexactKernel { kind: spec.kind_name() });
        }
    }
    Ok(())
}

fn bernoulli_p(instance: &BanditInstance, arm_index: usize) -> f64 {
    match instance.arms()[arm_index] {
        crate::env::ArmDistribution::Bernoulli { p } => p,
        _ => unreachable!("guarded to Bernoulli"),
    }
}

/// All single-policy trajectories with exact probabilities under the
/// canonical environment (fresh reward per step).
fn enumerate_single(
    spec: &PolicySpec,
    instance: &BanditInstance,
    horizon: u32,
) -> Vec<(TrajKey, f64)> {
    let mut out = Vec::new();
    let state = PolicyState::new(instance.k(), horizon);
    let mut key = TrajKey::new();
    recurse_single(spec, instance, horizon, state, &mut key, 1.0, &mut out);
    out
}

fn recurse_single(
    spec: &PolicySpec,
    instance: &BanditInstance,
    horizon: u32,
    state: PolicyState,
    key: &mut TrajKey,
    prob: f64,
    out: &mut Vec<(TrajKey, f64)>,
) {
    let t = state.t() + 1;
    if t > horizon {
        out.push((key.clone(), prob));
        return;
    }
    let kernel = action_distribution(spec, &state, t).expect("guarded to exact kernels");
    for (i, &q) in kernel.iter().enumerate() {
        if q == 0.0 {
            continue;
        }
        let p = bernoulli_p(instance, i);
        for (reward, pr) in [(1u8, p), (0u8, 1.0 - p)] {
            if pr == 0.0 {
                continue;
            }
            let mut next = state.clone();
            update(spec, &mut next, ArmId::from_index(i), reward as f64).expect("valid update");
            key.push((i as u8 + 1, reward));
            recurse_single(spec, instance, horizon, next, key, prob * q * pr, out);
            key.pop();
        }
    }
}

/// Phase-2 enumeration of the replay design given a fixed phase-1 path.
fn recurse_replay_phase2(
    spec: &PolicySpec,
    instance: &BanditInstance,
    horizon: u32,
    state: PolicyState,
    queues: &mut Vec<VecDeque<u8>>,
    key: &mut TrajKey,
    prob: f64,
    traj0: &TrajKey,
    out: &mut OutcomeAtoms,
) {
    let t = state.t() + 1;
    if t > horizon {
        *out.entry((traj0.clone(), key.clone())).or_insert(0.0) += prob;
        return;
    }
    let kernel = action_distribution(spec, &state, t).expect("guarded to exact kernels");
    for (i, &q) in kernel.iter().enumerate() {
        if q == 0.0 {
            continue;
        }
        match queues[i].pop_front() {
            Some(reward) => {
                let mut next = state.clone();
                update(spec, &mut next, ArmId::from_index(i), reward as f64).expect("valid update");
                key.push((i as u8 + 1, reward));
                recurse_replay_phase2(spec, instance, horizon, next, queues, key, prob * q, traj0, out);
                key.pop();
                queues[i].push_front(reward);
            }
            None => {
                let p = bernoulli_p(instance, i);
                for (reward, pr) in [(1u8, p), (0u8, 1.0 - p)] {
                    if pr == 0.0 {
                        continue;
                    }
                    let mut next = state.clone();
                    update(spec, &mut next, ArmId::from_index(i), reward as f64)
                        .expect("valid update");
                    key.push((i as u8 + 1, reward));
                    recurse_replay_phase2(
                        spec,
                        instance,
                        horizon,
                        next,
                        queues,
                        key,
                        prob * q * pr,
                        traj0,
                        out,
                    );
                    key.pop();
                }
            }
        }
    }
}

/// All trajectories of one policy reading a fixed 0/1 reward stack.
fn enumerate_on_stack(
    spec: &PolicySpec,
    horizon: u32,
    k: u32,
    stack: &[Vec<u8>],
) -> Vec<(TrajKey, f64)> {
    fn recurse(
        spec: &PolicySpec,
        horizon: u32,
        stack: &[Vec<u8>],
        state: PolicyState,
        key: &mut TrajKey,
        prob: f64,
        out: &mut Vec<(TrajKey, f64)>,
    ) {
        let t = state.t() + 1;
        if t > horizon {
            out.push((key.clone(), prob));
            return;
        }
        let kernel = action_distribution(spec, &state, t).expect("guarded to exact kernels");
        for (i, &q) in kernel.iter().enumerate() {
            if q == 0.0 {
                continue;
            }
            let depth = state.pulls()[i] as usize;
            let reward = stack[i][depth];
            let mut next = state.clone();
            update(spec, &mut next, ArmId::from_index(i), reward as f64).expect("valid update");
            key.push((i as u8 + 1, reward));
            recurse(spec, horizon, stack, next, key, prob * q, out);
            key.pop();
        }
    }
    let mut out = Vec::new();
    let mut key = TrajKey::new();
    recurse(spec, horizon, stack, PolicyState::new(k, horizon), &mut key, 1.0, &mut out);
    out
}

/// Exact outcome distribution of a design on a desk-size discrete case:
/// Bernoulli rewards, exact-kernel policies, K <= 2, T <= 4. Policy
/// randomness is enumerated through the closed-form kernels, reward
/// randomness through the 0/1 atoms, so the returned probabilities are
/// exact up to float rounding.
pub fn brute_force_distribution(
    instance: &BanditInstance,
    pi0: &PolicySpec,
    pi1: &PolicySpec,
    horizon: u32,
    design: Design,
) -> Result<OutcomeAtoms, EquivError> {
    brute_force_guard(instance, pi0, pi1, horizon)?;
    let k = instance.k();
    let mut atoms = OutcomeAtoms::new();
    match design {
        Design::Naive => {
            let d0 = enumerate_single(pi0, instance, horizon);
            let d1 = enumerate_single(pi1, instance, horizon);
            for (k0, p0) in &d0 {
                for (k1, p1) in &d1 {
                    *atoms.entry((k0.clone(), k1.clone())).or_insert(0.0) += p0 * p1;
                }
            }
        }
        Design::Ar => {
            for (traj0, p0) in enumerate_single(pi0, instance, horizon) {
                let mut queues: Vec<VecDeque<u8>> = vec![VecDeque::new(); k as usize];
                for &(arm, reward) in &traj0 {
                    queues[(arm - 1) as usize].push_back(reward);
                }
                let mut key = TrajKey::new();
                recurse_replay_phase2(
                    pi1,
                    instance,
                    horizon,
                    PolicyState::new(k, horizon),
                    &mut queues,
                    &mut key,
                    p0,
                    &traj0,
                    &mut atoms,
                );
            }
        }
        Design::SharedStack => {
            // enumerate every 0/1 stack realization with its probability
            let cells = (k * horizon) as usize;
            for mask in 0u32..(1 << cells) {
                let mut stack = vec![vec![0u8; horizon as usize]; k as usize];
                let mut p_stack = 1.0;
                for c in 0..cells {
                    let arm = c / horizon as usize;
                    let depth = c % horizon as usize;
                    let bit = (mask >> c) & 1;
                    stack[arm][depth] = bit as u8;
                    let p = bernoulli_p(instance, arm);
                    p_stack *= if bit == 1 { p } else { 1.0 - p };
                    if p_stack == 0.0 {
                        break;
                    }
                }
                if p_stack == 0.0 {
                    continue;
                }
                let d0 = enumerate_on_stack(pi0, horizon, k, &stack);
                let d1 = enumerate_on_stack(pi1, horizon, k, &stack);
                for (k0, q0) in &d0 {
                    for (k1, q1) in &d1 {
                        *atoms.entry((k0.clone(), k1.clone())).or_insert(0.0) +=
                            p_stack * q0 * q1;
                    }
                }
            }
        }
    }
    Ok(atoms)
}

/// Marginal distribution of one policy's trajectory under a joint atom map.
pub fn marginal_distribution(atoms: &OutcomeAtoms, policy: usize) -> BTreeMap<TrajKey, f64> {
    let mut out = BTreeMap::new();
    for ((k0, k1), p) in atoms {
        let key = if policy == 0 { k0 } else { k1 };
        *out.entry(key.clone()).or_insert(0.0) += p;
    }
    out
}

/// Largest absolute per-atom difference between two atom maps.
pub fn atomwise_distance<K: Ord + Clone>(a: &BTreeMap<K, f64>, b: &BTreeMap<K, f64>) -> f64 {
    let mut keys: Vec<K> = a.keys().cloned().collect();
    keys.extend(b.keys().cloned());
    keys.sort();
    keys.dedup();
    keys.iter()
        .map(|k| (a.get(k).copied().unwrap_or(0.0) - b.get(k).copied().unwrap_or(0.0)).abs())
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Seeded bugs
// ---------------------------------------------------------------------------

/// Deliberately broken runner variants used to demonstrate that the
/// equivalence battery detects real coupling mistakes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeededBug {
    /// Replay the latest unused matching observation instead of the earliest.
    LifoReplay,
    /// Replay the earliest matching observation but never mark it used.
    ReplayWithoutConsuming,
    /// Shared-stack runner that reads every arm from arm 1's stack.
    StackSharedAcrossArms,
}

/// Run one replication with `bug` injected. Counters are tallied from the
/// step flags because the pull-count identities need not hold under a bug.
pub fn run_with_bug(
    bug: SeededBug,
    pi0: &PolicySpec,
    pi1: &PolicySpec,
    instance: &BanditInstance,
    horizon: u32,
    streams_of_run: &mut RunStreams,
) -> Result<RunOutput, DesignError> {
    match bug {
        SeededBug::LifoReplay | SeededBug::ReplayWithoutConsuming => {
            let rec = run_ar_buggy_replay(bug, pi0, pi1, instance, horizon, streams_of_run)?;
            Ok(RunOutput::from_ar(&rec))
        }
        SeededBug::StackSharedAcrossArms => {
            let (t0, t1) = run_pooled_stack(pi0, pi1, instance, horizon, streams_of_run)?;
            Ok(RunOutput::from_shared_stack(&t0, &t1, instance.k()))
        }
    }
}

fn run_ar_buggy_replay(
    bug: SeededBug,
    pi0: &PolicySpec,
    pi1: &PolicySpec,
    instance: &BanditInstance,
    horizon: u32,
    s: &mut RunStreams,
) -> Result<ArRunRecord, DesignError> {
    let k = instance.k();
    let traj0 = crate::designs::run_single(pi0, instance, horizon, &mut s.rewards, s.policy0)?;
    let mut queues: Vec<VecDeque<f64>> = vec![VecDeque::new(); k as usize];
    for step in traj0.steps() {
        queues[step.arm.index()].push_back(step.reward);
    }
    let mut state = PolicyState::new(k, horizon);
    let mut steps = Vec::with_capacity(horizon as usize);
    let mut env_phase2 = 0u64;
    for t in 1..=horizon {
        let arm = crate::designs::select_with_stream(pi1, &state, t, s.policy1)?;
        let picked = match bug {
            SeededBug::LifoReplay => queues[arm.index()].pop_back(),
            SeededBug::ReplayWithoutConsuming => queues[arm.index()].front().copied(),
            SeededBug::StackSharedAcrossArms => unreachable!("handled by the stack runner"),
        };
        let (reward, source) = match picked {
            Some(r) => (r, RewardSource::Replay),
            None => {
                env_phase2 += 1;
                (
                    crate::env::sample_reward(instance, arm, &mut s.rewards)?,
                    RewardSource::Environment,
                )
            }
        };
        update(pi1, &mut state, arm, reward)?;
        steps.push(Step { arm, reward, source });
    }
    let traj1 = Trajectory::from_steps(steps);
    let pulls0 = traj0.pull_counts(k);
    let pulls1 = traj1.pull_counts(k);
    // counters tallied from flags; the max/min identities need not hold here
    Ok(ArRunRecord {
        n_env: u64::from(horizon) + env_phase2,
        n_replay: u64::from(horizon) - env_phase2,
        traj0,
        traj1,
        pulls0,
        pulls1,
    })
}

fn run_pooled_stack(
    pi0: &PolicySpec,
    pi1: &PolicySpec,
    instance: &BanditInstance,
    horizon: u32,
    s: &mut RunStreams,
) -> Result<(Trajectory, Trajectory), DesignError> {
    let k = instance.k() as usize;
    let mut stacks = Vec::with_capacity(k);
    for arm in instance.arms() {
        let column: Vec<f64> = (0..horizon).map(|_| arm.sample(&mut s.rewards)).collect();
        stacks.push(column);
    }
    let run = |spec: &PolicySpec,
                   policy: streams::PolicyStream|
     -> Result<Trajectory, DesignError> {
        let mut state = PolicyState::new(k as u32, horizon);
        let mut steps = Vec::with_capacity(horizon as usize);
        for t in 1..=horizon {
            let arm = crate::designs::select_with_stream(spec, &state, t, policy)?;
            let depth = state.pull_count(arm) as usize;
            // the bug: every arm reads arm 1's stack
            let reward = stacks[0][depth];
            update(spec, &mut state, arm, reward)?;
            steps.push(Step { arm, reward, source: RewardSource::Environment });
        }
        Ok(Trajectory::from_steps(steps))
    };
    let t0 = run(pi0, s.policy0)?;
    let t1 = run(pi1, s.policy1)?;
    Ok((t0, t1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn chi_square_identical_histograms() {
        let r = chi_square_two_sample(&[40, 30, 30], &[40, 30, 30]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn chi_square_disjoint_histograms() {
        let r = chi_square_two_sample(&[100, 0], &[0, 100]).unwrap();
        assert!((r.statistic - 200.0).abs() < 1e-9, "{}", r.statistic);
        assert!(r.p_value < 1e-6);
    }

    #[test]
    fn chi_square_rejects_empty() {
        assert!(chi_square_two_sample(&[], &[]).is_err());
        assert!(chi_square_two_sample(&[0, 0], &[1, 2]).is_err());
        assert!(chi_square_two_sample(&[1, 2], &[1, 2, 3]).is_err());
    }

    #[test]
    fn chi_square_pools_sparse_bins() {
        // long sparse tails must pool instead of blowing up the statistic
        let mut a = vec![0u64; 50];
        let mut b = vec![0u64; 50];
        a[0] = 200;
        b[0] = 195;
        for i in 1..50 {
            a[i] = u64::from(i % 2 == 0);
            b[i] = u64::from(i % 3 == 0);
        }
        let r = chi_square_two_sample(&a, &b).unwrap();
        assert!(r.p_value > 0.01, "p {}", r.p_value);
    }

    #[test]
    fn ks_identical_and_shifted() {
        let xs: Vec<f64> = (0..100).map(|i| i as f64 / 10.0).collect();
        let r = ks_two_sample(&xs, &xs).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(r.p_value > 0.999);

        let shifted: Vec<f64> = xs.iter().map(|x| x + 1000.0).collect();
        let r = ks_two_sample(&xs, &shifted).unwrap();
        assert!((r.statistic - 1.0).abs() < 1e-12);
        assert!(r.p_value < 1e-6);

        assert!(ks_two_sample(&xs[..5], &xs).is_err());
    }

    #[test]
    fn calibration_smoke() {
        // small version of the acceptance calibration: same-distribution
        // data should not be rejected at grossly the wrong rate
        let mut rejections = 0;
        let trials = 200;
        for trial in 0..trials {
            let mut rng = streams::chacha(streams::mix64(77, &[trial]));
            let a: Vec<f64> = (0..100).map(|_| rng.random::<f64>()).collect();
            let b: Vec<f64> = (0..100).map(|_| rng.random::<f64>()).collect();
            if ks_two_sample(&a, &b).unwrap().p_value <= 0.05 {
                rejections += 1;
            }
        }
        let rate = rejections as f64 / trials as f64;
        assert!(rate < 0.12, "rate {rate}");
    }

    fn tiny_instance(p: f64) -> BanditInstance {
        BanditInstance::bernoulli(&[p]).unwrap()
    }

    #[test]
    fn brute_force_single_arm_single_period() {
        let inst = tiny_instance(0.3);
        let pi = PolicySpec::eps_greedy(0.5).unwrap();
        let atoms = brute_force_distribution(&inst, &pi, &pi, 1, Design::Ar).unwrap();
        // phase 2 always replays: outcomes are ((1,r),(1,r))
        assert_eq!(atoms.len(), 2);
        let p1 = atoms.get(&(vec![(1, 1)], vec![(1, 1)])).copied().unwrap();
        let p0 = atoms.get(&(vec![(1, 0)], vec![(1, 0)])).copied().unwrap();
        assert!((p1 - 0.3).abs() < 1e-15);
        assert!((p0 - 0.7).abs() < 1e-15);
    }

    #[test]
    fn brute_force_masses_sum_to_one() {
        let inst = BanditInstance::bernoulli(&[0.6, 0.2]).unwrap();
        let pi0 = PolicySpec::ucb1(2.0).unwrap();
        let pi1 = PolicySpec::eps_greedy(0.3).unwrap();
        for design in [Design::Naive, Design::Ar, Design::SharedStack] {
            let atoms = brute_force_distribution(&inst, &pi0, &pi1, 3, design).unwrap();
            let total: f64 = atoms.values().sum();
            assert!((total - 1.0).abs() < 1e-12, "{design:?}: {total}");
        }
    }

    #[test]
    fn brute_force_ar_equals_shared_stack_deterministic() {
        // K=2, T=2 with deterministic (warm-up) behavior: 4 reward atoms
        let inst = BanditInstance::bernoulli(&[0.6, 0.2]).unwrap();
        let pi0 = PolicySpec::ucb1(2.0).unwrap();
        let pi1 = PolicySpec::ucb1(3.0).unwrap();
        let ar = brute_force_distribution(&inst, &pi0, &pi1, 2, Design::Ar).unwrap();
        let stack =
            brute_force_distribution(&inst, &pi0, &pi1, 2, Design::SharedStack).unwrap();
        assert!(atomwise_distance(&ar, &stack) < 1e-12);
        assert_eq!(ar.len(), 4);
    }

    #[test]
    fn brute_force_guards() {
        let big = BanditInstance::bernoulli(&[0.1, 0.2]).unwrap();
        let pi = PolicySpec::eps_greedy(0.1).unwrap();
        assert!(matches!(
            brute_force_distribution(&big, &pi, &pi, 5, Design::Ar),
            Err(EquivError::TooLargeForBruteForce { .. })
        ));
        let gauss = BanditInstance::gaussian(&[0.0], 1.0).unwrap();
        assert!(matches!(
            brute_force_distribution(&gauss, &pi, &pi, 2, Design::Ar),
            Err(EquivError::NonBernoulliArms)
        ));
        let ts = PolicySpec::ts_bernoulli(1.0, 1.0).unwrap();
        let small = tiny_instance(0.4);
        assert!(matches!(
            brute_force_distribution(&small, &ts, &pi, 2, Design::Ar),
            Err(EquivError::InexactKernel { .. })
        ));
    }

    #[test]
    fn identical_deterministic_policies_pass_battery_exactly() {
        let inst = BanditInstance::bernoulli(&[0.7, 0.4]).unwrap();
        let pi = PolicySpec::ucb1(2.0).unwrap();
        let reports = check_equivalence(&pi, &pi, &inst, 30, 400, 99, 0.01).unwrap();
        for r in reports.iter().filter(|r| r.name.contains("pulls")) {
            assert!(r.pass, "{}: p={}", r.name, r.p_value);
        }
        assert!(reports.iter().all(|r| r.pass), "{reports:?}");
    }

    #[test]
    fn symmetry_check_on_identical_policies() {
        let inst = BanditInstance::bernoulli(&[0.7, 0.3]).unwrap();
        let pi = PolicySpec::ucb1(2.0).unwrap();
        let report = check_symmetry(&pi, &pi, &inst, 40, 500, 11, 0.01).unwrap();
        assert!(report.pass, "p = {}", report.p_value);
    }

    #[test]
    fn marginals_of_brute_force_naive_match_singles() {
        let inst = BanditInstance::bernoulli(&[0.5, 0.3]).unwrap();
        let pi0 = PolicySpec::eps_greedy(0.2).unwrap();
        let pi1 = PolicySpec::ucb1(2.0).unwrap();
        let joint = brute_force_distribution(&inst, &pi0, &pi1, 3, Design::Naive).unwrap();
        let marg0 = marginal_distribution(&joint, 0);
        let direct: BTreeMap<TrajKey, f64> = {
            let mut m = BTreeMap::new();
            for (k, p) in enumerate_single(&pi0, &inst, 3) {
                *m.entry(k).or_insert(0.0) += p;
            }
            m
        };
        assert!(atomwise_distance(&marg0, &direct) < 1e-14);
    }
}
