//! Built-in experiment presets. Each one pins the instance, the policy
//! pair, the four standard horizons, and a fixed master seed so repeated
//! invocations reproduce byte-identical output.

use super::config::{ExperimentConfig, InstanceConfig, PolicyConfig};
use crate::designs::Design;

pub fn preset_names() -> &'static [&'static str] {
    &["example1", "example2", "example3"]
}

/// Returns the named preset, if it exists.
pub fn preset(name: &str) -> Option<ExperimentConfig> {
    let base = |instance, policy0, policy1, master_seed| ExperimentConfig {
        instance,
        policy0,
        policy1,
        horizons: vec![10, 100, 1_000, 10_000],
        m_ci: 10,
        m_var: 10_000,
        ci_alpha: 0.01,
        master_seed,
        designs: vec![Design::Naive, Design::Ar],
        bayes: None,
    };
    match name {
        // five-armed Bernoulli, two UCB1 variants
        "example1" => Some(base(
            InstanceConfig::Bernoulli { means: vec![0.9, 0.7, 0.5, 0.3, 0.1] },
            PolicyConfig::Ucb1 { alpha: 2.5 },
            PolicyConfig::Ucb1 { alpha: 3.0 },
            1_0001,
        )),
        // two-armed Bernoulli, UCB1 against Bernoulli Thompson sampling
        "example2" => Some(base(
            InstanceConfig::Bernoulli { means: vec![0.7, 0.3] },
            PolicyConfig::Ucb1 { alpha: 2.0 },
            PolicyConfig::TsBernoulli { alpha0: 1.0, beta0: 1.0 },
            1_0002,
        )),
        // five-armed Gaussian, Gaussian Thompson sampling against eps-greedy
        "example3" => Some(base(
            InstanceConfig::Gaussian {
                means: vec![1.0, 0.8, -2.0, -3.0, -4.0],
                variance: Some(1.0),
                variances: None,
            },
            PolicyConfig::TsGaussian { prior_mean: 0.0, prior_var: 1.0, obs_var: 1.0 },
            PolicyConfig::EpsGreedy { eps: 0.1 },
            1_0003,
        )),
        _ => None,
    }
}
