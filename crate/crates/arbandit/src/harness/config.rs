//! Experiment configuration: JSON-friendly descriptions of instances,
//! policies, and replication settings, with field-level validation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::designs::Design;
use crate::env::{ArmDistribution, BanditInstance};
use crate::policies::PolicySpec;

#[derive(Debug, Error, PartialEq)]
#[error("{field}: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { field: field.into(), message: message.into() }
    }
}

/// Instance description as it appears in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceConfig {
    Bernoulli {
        means: Vec<f64>,
    },
    Gaussian {
        means: Vec<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        variance: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        variances: Option<Vec<f64>>,
    },
}

impl InstanceConfig {
    pub fn build(&self, field: &str) -> Result<BanditInstance, ConfigError> {
        match self {
            Self::Bernoulli { means } => {
                if means.is_empty() {
                    return Err(ConfigError::new(format!("{field}.means"), "must be nonempty"));
                }
                for (i, &p) in means.iter().enumerate() {
                    if !(0.0..=1.0).contains(&p) {
                        return Err(ConfigError::new(
                            format!("{field}.means[{i}]"),
                            format!("Bernoulli mean must be in [0, 1], got {p}"),
                        ));
                    }
                }
                BanditInstance::bernoulli(means)
                    .map_err(|e| ConfigError::new(format!("{field}.means"), e.to_string()))
            }
            Self::Gaussian { means, variance, variances } => {
                if means.is_empty() {
                    return Err(ConfigError::new(format!("{field}.means"), "must be nonempty"));
                }
                let vars: Vec<f64> = match (variance, variances) {
                    (Some(v), None) => vec![*v; means.len()],
                    (None, Some(vs)) => {
                        if vs.len() != means.len() {
                            return Err(ConfigError::new(
                                format!("{field}.variances"),
                                format!("expected {} entries, got {}", means.len(), vs.len()),
                            ));
                        }
                        vs.clone()
                    }
                    (Some(_), Some(_)) => {
                        return Err(ConfigError::new(
                            format!("{field}.variance"),
                            "give either a common variance or per-arm variances, not both",
                        ))
                    }
                    (None, None) => {
                        return Err(ConfigError::new(
                            format!("{field}.variance"),
                            "a Gaussian instance needs variance or variances",
                        ))
                    }
                };
                let arms = means
                    .iter()
                    .zip(&vars)
                    .enumerate()
                    .map(|(i, (&m, &v))| {
                        ArmDistribution::gaussian(m, v).map_err(|e| {
                            ConfigError::new(format!("{field}.variances[{i}]"), e.to_string())
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                BanditInstance::new(arms)
                    .map_err(|e| ConfigError::new(field.to_string(), e.to_string()))
            }
        }
    }
}

fn default_ts_prior() -> f64 {
    1.0
}
fn default_prior_mean() -> f64 {
    0.0
}
fn default_prior_var() -> f64 {
    1.0
}
fn default_obs_var() -> f64 {
    1.0
}

/// Policy description as it appears in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicyConfig {
    Ucb1 {
        alpha: f64,
    },
    UcbDelta {
        #[serde(skip_serializing_if = "Option::is_none")]
        d: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        delta: Option<f64>,
    },
    TsBernoulli {
        #[serde(default = "default_ts_prior")]
        alpha0: f64,
        #[serde(default = "default_ts_prior")]
        beta0: f64,
    },
    TsGaussian {
        #[serde(default = "default_prior_mean")]
        prior_mean: f64,
        #[serde(default = "default_prior_var")]
        prior_var: f64,
        #[serde(default = "default_obs_var")]
        obs_var: f64,
    },
    EpsGreedy {
        eps: f64,
    },
}

impl PolicyConfig {
    pub fn build(&self, field: &str) -> Result<PolicySpec, ConfigError> {
        match *self {
            Self::Ucb1 { alpha } => PolicySpec::ucb1(alpha)
                .map_err(|e| ConfigError::new(format!("{field}.alpha"), e.to_string())),
            Self::UcbDelta { d, delta } => match (d, delta) {
                (Some(d), None) => PolicySpec::ucb_delta_horizon(d)
                    .map_err(|e| ConfigError::new(format!("{field}.d"), e.to_string())),
                (None, Some(delta)) => PolicySpec::ucb_delta_explicit(delta)
                    .map_err(|e| ConfigError::new(format!("{field}.delta"), e.to_string())),
                _ => Err(ConfigError::new(
                    format!("{field}.d"),
                    "ucb_delta needs exactly one of d or delta",
                )),
            },
            Self::TsBernoulli { alpha0, beta0 } => PolicySpec::ts_bernoulli(alpha0, beta0)
                .map_err(|e| ConfigError::new(format!("{field}.alpha0"), e.to_string())),
            Self::TsGaussian { prior_mean, prior_var, obs_var } => {
                PolicySpec::ts_gaussian(prior_mean, prior_var, obs_var)
                    .map_err(|e| ConfigError::new(format!("{field}.prior_var"), e.to_string()))
            }
            Self::EpsGreedy { eps } => {
                if !(0.0..=1.0).contains(&eps) {
                    return Err(ConfigError::new(
                        format!("{field}.eps"),
                        format!("must be in [0, 1], got {eps}"),
                    ));
                }
                PolicySpec::eps_greedy(eps)
                    .map_err(|e| ConfigError::new(format!("{field}.eps"), e.to_string()))
            }
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Ucb1 { .. } => "ucb1",
            Self::UcbDelta { .. } => "ucb_delta",
            Self::TsBernoulli { .. } => "ts_bernoulli",
            Self::TsGaussian { .. } => "ts_gaussian",
            Self::EpsGreedy { .. } => "eps_greedy",
        }
    }
}

/// Prior over instances for the Bayesian extension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorConfig {
    /// Per-arm Bernoulli means drawn i.i.d. from U[lo, hi].
    BernoulliUniform {
        k: u32,
        #[serde(default)]
        lo: f64,
        #[serde(default = "default_hi")]
        hi: f64,
    },
    /// Finite mixture of fixed instances.
    PointMasses {
        instances: Vec<InstanceConfig>,
        #[serde(skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
}

fn default_hi() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BayesConfig {
    pub prior: PriorConfig,
    pub instances_m: usize,
}

fn default_m_ci() -> usize {
    10
}
fn default_m_var() -> usize {
    10_000
}
fn default_ci_alpha() -> f64 {
    0.01
}
fn default_master_seed() -> u64 {
    0x0a11ce
}
fn default_designs() -> Vec<Design> {
    vec![Design::Naive, Design::Ar]
}

/// Full experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceConfig,
    pub policy0: PolicyConfig,
    pub policy1: PolicyConfig,
    pub horizons: Vec<u32>,
    /// Replications behind the reported means and confidence intervals.
    #[serde(default = "default_m_ci")]
    pub m_ci: usize,
    /// Replications behind variance and interaction statistics.
    #[serde(default = "default_m_var")]
    pub m_var: usize,
    #[serde(default = "default_ci_alpha")]
    pub ci_alpha: f64,
    #[serde(default = "default_master_seed")]
    pub master_seed: u64,
    #[serde(default = "default_designs")]
    pub designs: Vec<Design>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bayes: Option<BayesConfig>,
}

impl ExperimentConfig {
    pub fn from_json(json: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(json).map_err(|e| ConfigError::new("config", e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Validates every field, returning the first violation with its path.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.instance.build("instance")?;
        self.policy0.build("policy0")?;
        self.policy1.build("policy1")?;
        if self.horizons.is_empty() {
            return Err(ConfigError::new("horizons", "must be nonempty"));
        }
        if self.horizons[0] == 0 {
            return Err(ConfigError::new("horizons[0]", "horizons start at 1"));
        }
        if !self.horizons.windows(2).all(|w| w[0] < w[1]) {
            return Err(ConfigError::new("horizons", "must be strictly increasing"));
        }
        if self.m_ci < 2 {
            return Err(ConfigError::new("m_ci", format!("must be >= 2, got {}", self.m_ci)));
        }
        if self.m_var < 2 {
            return Err(ConfigError::new("m_var", format!("must be >= 2, got {}", self.m_var)));
        }
        if !(self.ci_alpha > 0.0 && self.ci_alpha < 1.0) {
            return Err(ConfigError::new(
                "ci_alpha",
                format!("must be in (0, 1), got {}", self.ci_alpha),
            ));
        }
        if self.designs.is_empty() {
            return Err(ConfigError::new("designs", "must request at least one design"));
        }
        let mut seen = Vec::new();
        for d in &self.designs {
            if seen.contains(d) {
                return Err(ConfigError::new("designs", "must not repeat a design"));
            }
            seen.push(*d);
        }
        if let Some(bayes) = &self.bayes {
            if bayes.instances_m < 2 {
                return Err(ConfigError::new(
                    "bayes.instances_m",
                    format!("must be >= 2, got {}", bayes.instances_m),
                ));
            }
            match &bayes.prior {
                PriorConfig::BernoulliUniform { k, lo, hi } => {
                    if *k == 0 {
                        return Err(ConfigError::new("bayes.prior.k", "must be >= 1"));
                    }
                    if !(0.0..=1.0).contains(lo) || !(0.0..=1.0).contains(hi) || lo >= hi {
                        return Err(ConfigError::new(
                            "bayes.prior.lo",
                            format!("need 0 <= lo < hi <= 1, got ({lo}, {hi})"),
                        ));
                    }
                }
                PriorConfig::PointMasses { instances, weights } => {
                    if instances.is_empty() {
                        return Err(ConfigError::new("bayes.prior.instances", "must be nonempty"));
                    }
                    for (i, inst) in instances.iter().enumerate() {
                        inst.build(&format!("bayes.prior.instances[{i}]"))?;
                    }
                    if let Some(w) = weights {
                        if w.len() != instances.len() {
                            return Err(ConfigError::new(
                                "bayes.prior.weights",
                                format!("expected {} entries, got {}", instances.len(), w.len()),
                            ));
                        }
                        if w.iter().any(|&x| x < 0.0) || w.iter().sum::<f64>() <= 0.0 {
                            return Err(ConfigError::new(
                                "bayes.prior.weights",
                                "must be nonnegative with positive sum",
                            ));
                        }
                    }
                    let k0 = instances[0].build("bayes.prior.instances[0]")?.k();
                    for (i, inst) in instances.iter().enumerate().skip(1) {
                        let k = inst.build(&format!("bayes.prior.instances[{i}]"))?.k();
                        if k != k0 {
                            return Err(ConfigError::new(
                                format!("bayes.prior.instances[{i}]"),
                                format!("all instances need the same K (got {k} vs {k0})"),
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}
