//! Replication orchestration: fan M runs out per (horizon, design), reduce
//! them to the reported statistics. Seeding depends only on
//! `(master_seed, design, horizon, batch, run index)`, so results are
//! identical whether runs execute serially or in parallel.

use rayon::prelude::*;
use thiserror::Error;

use super::config::{ConfigError, ExperimentConfig, PriorConfig};
use crate::designs::{run_ar, Design, DesignError};
use crate::env::BanditInstance;
use crate::equivtest::{sample_design, EquivError};
use crate::policies::PolicySpec;
use crate::stats::{
    confidence_interval, pull_count_moments, summarize, StatsError,
};
use crate::streams::{self, tag, RunStreams};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config — {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Equiv(#[from] EquivError),
}

/// Statistics of one design at one horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignStats {
    pub design: Design,
    /// Mean and two-sided CI of the estimator over the `m_ci` batch.
    pub mean: f64,
    pub lb: f64,
    pub ub: f64,
    /// Estimator variance over the `m_var` batch.
    pub var: f64,
    pub mean_interactions: f64,
    pub mean_replays: f64,
    /// Per-policy per-arm pull-count means over the `m_var` batch.
    pub pull_mean: [Vec<f64>; 2],
    /// Per-policy per-arm pull-count variances divided by the horizon.
    pub pull_var_over_t: [Vec<f64>; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct HorizonRow {
    pub horizon: u32,
    pub stats: Vec<DesignStats>,
}

impl HorizonRow {
    pub fn design(&self, design: Design) -> Option<&DesignStats> {
        self.stats.iter().find(|s| s.design == design)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub k: u32,
    pub rows: Vec<HorizonRow>,
}

/// Batch seed for one (design, horizon, purpose) cell of an experiment.
pub fn experiment_batch_seed(master_seed: u64, design: Design, horizon: u32, batch: u64) -> u64 {
    streams::mix64(master_seed, &[tag::BATCH, design.tag(), u64::from(horizon), batch])
}

const BATCH_CI: u64 = 0;
const BATCH_VAR: u64 = 1;
const BAYES_DESIGN_TAG: u64 = 7;

/// Runs the experiment described by `config`: for every horizon and every
/// requested design, the estimator mean with its CI (from `m_ci` runs) and
/// the variance / interaction / pull-count statistics (from `m_var` runs).
pub fn run_experiment(config: &ExperimentConfig) -> Result<ResultTable, HarnessError> {
    config.validate()?;
    let instance = config.instance.build("instance")?;
    let pi0 = config.policy0.build("policy0")?;
    let pi1 = config.policy1.build("policy1")?;
    let mut rows = Vec::with_capacity(config.horizons.len());
    for &horizon in &config.horizons {
        let mut stats = Vec::with_capacity(config.designs.len());
        for &design in &config.designs {
            stats.push(run_cell(
                design,
                &pi0,
                &pi1,
                &instance,
                horizon,
                config,
            )?);
        }
        rows.push(HorizonRow { horizon, stats });
    }
    Ok(ResultTable { k: instance.k(), rows })
}

fn run_cell(
    design: Design,
    pi0: &PolicySpec,
    pi1: &PolicySpec,
    instance: &BanditInstance,
    horizon: u32,
    config: &ExperimentConfig,
) -> Result<DesignStats, HarnessError> {
    let ci_seed = experiment_batch_seed(config.master_seed, design, horizon, BATCH_CI);
    let ci_runs = sample_design(design, pi0, pi1, instance, horizon, ci_seed, config.m_ci)?;
    let ci_summary = summarize(&ci_runs)?;
    let (lb, ub) = confidence_interval(&ci_summary, config.ci_alpha)?;

    let var_seed = experiment_batch_seed(config.master_seed, design, horizon, BATCH_VAR);
    let var_runs = sample_design(design, pi0, pi1, instance, horizon, var_seed, config.m_var)?;
    let var_summary = summarize(&var_runs)?;

    let t = f64::from(horizon);
    let (mean0, var0) = pull_count_moments(&var_summary.pull_samples[0]);
    let (mean1, var1) = pull_count_moments(&var_summary.pull_samples[1]);
    Ok(DesignStats {
        design,
        mean: ci_summary.mean,
        lb,
        ub,
        var: var_summary.sample_var.expect("m_var >= 2"),
        mean_interactions: var_summary.mean_n_env(),
        mean_replays: var_summary.mean_n_replay(),
        pull_mean: [mean0, mean1],
        pull_var_over_t: [
            var0.iter().map(|v| v / t).collect(),
            var1.iter().map(|v| v / t).collect(),
        ],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BayesRow {
    pub horizon: u32,
    pub mean: f64,
    pub lb: f64,
    pub ub: f64,
    pub instances_m: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BayesTable {
    pub rows: Vec<BayesRow>,
}

/// Bayesian extension: draw instances from the configured prior, run one
/// replay-design replication per instance, and average the estimates. The
/// CI is over instances (Student t, `instances_m - 1` degrees of freedom).
pub fn run_bayes(config: &ExperimentConfig) -> Result<BayesTable, HarnessError> {
    config.validate()?;
    let bayes = config
        .bayes
        .as_ref()
        .ok_or_else(|| ConfigError { field: "bayes".into(), message: "block required".into() })?;
    let pi0 = config.policy0.build("policy0")?;
    let pi1 = config.policy1.build("policy1")?;
    let m = bayes.instances_m;
    let mut rows = Vec::with_capacity(config.horizons.len());
    for &horizon in &config.horizons {
        let seed = streams::mix64(
            config.master_seed,
            &[tag::BATCH, BAYES_DESIGN_TAG, u64::from(horizon)],
        );
        let thetas: Vec<f64> = (0..m)
            .into_par_iter()
            .map(|i| -> Result<f64, HarnessError> {
                let instance = sample_prior(&bayes.prior, seed, i as u64)?;
                let mut s = RunStreams::for_run(seed, i as u64);
                let rec = run_ar(&pi0, &pi1, &instance, horizon, &mut s)?;
                Ok(rec.traj1.total_reward() - rec.traj0.total_reward())
            })
            .collect::<Result<_, _>>()?;
        let mean = crate::stats::mean(&thetas);
        let var = crate::stats::sample_variance(&thetas).expect("instances_m >= 2");
        let t = crate::stats::t_quantile(1.0 - config.ci_alpha / 2.0, m as u32 - 1)?;
        let half = t * (var / m as f64).sqrt();
        rows.push(BayesRow { horizon, mean, lb: mean - half, ub: mean + half, instances_m: m });
    }
    Ok(BayesTable { rows })
}

/// Draws one instance from the prior; deterministic in `(seed, index)`.
fn sample_prior(
    prior: &PriorConfig,
    seed: u64,
    index: u64,
) -> Result<BanditInstance, HarnessError> {
    use rand::Rng;
    let mut rng = streams::chacha(streams::mix64(seed, &[tag::INSTANCE, index]));
    match prior {
        PriorConfig::BernoulliUniform { k, lo, hi } => {
            let means: Vec<f64> =
                (0..*k).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect();
            Ok(BanditInstance::bernoulli(&means).expect("means in [lo, hi] are valid"))
        }
        PriorConfig::PointMasses { instances, weights } => {
            let n = instances.len();
            let w: Vec<f64> = match weights {
                Some(w) => w.clone(),
                None => vec![1.0; n],
            };
            let total: f64 = w.iter().sum();
            let mut u = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &wi) in w.iter().enumerate() {
                if u < wi {
                    chosen = i;
                    break;
                }
                u -= wi;
            }
            Ok(instances[chosen].build(&format!("bayes.prior.instances[{chosen}]"))?)
        }
    }
}
