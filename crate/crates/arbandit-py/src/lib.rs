//! Python bindings: instances, policies, the three experiment runners, and
//! the config-driven harness, exposed as the `arbandit_py` module.
//!
//! Build with `cargo build -p arbandit-py --release`, then import the
//! produced `libarbandit_py.so` as `arbandit_py` (see python/smoke_test.py
//! for a loader that does the rename).

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use arbandit::designs::{self, RewardSource, Trajectory};
use arbandit::env::{self, ArmId, BanditInstance};
use arbandit::harness;
use arbandit::policies::PolicySpec;
use arbandit::stats;
use arbandit::streams::RunStreams;

fn value_err(err: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(err.to_string())
}

/// A fixed bandit instance: ordered arm reward distributions.
#[pyclass(frozen, name = "Instance", skip_from_py_object)]
#[derive(Clone)]
struct PyInstance {
    inner: BanditInstance,
}

#[pymethods]
impl PyInstance {
    /// Bernoulli arms with the given success probabilities.
    #[staticmethod]
    fn bernoulli(means: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: BanditInstance::bernoulli(&means).map_err(value_err)? })
    }

    /// Gaussian arms with a common variance.
    #[staticmethod]
    fn gaussian(means: Vec<f64>, variance: f64) -> PyResult<Self> {
        Ok(Self { inner: BanditInstance::gaussian(&means, variance).map_err(value_err)? })
    }

    /// Gaussian arms with per-arm variances.
    #[staticmethod]
    fn gaussian_per_arm(means: Vec<f64>, variances: Vec<f64>) -> PyResult<Self> {
        if means.len() != variances.len() {
            return Err(value_err("means and variances must have equal length"));
        }
        let arms = means
            .iter()
            .zip(&variances)
            .map(|(&m, &v)| env::ArmDistribution::gaussian(m, v))
            .collect::<Result<Vec<_>, _>>()
            .map_err(value_err)?;
        Ok(Self { inner: BanditInstance::new(arms).map_err(value_err)? })
    }

    #[getter]
    fn k(&self) -> u32 {
        self.inner.k()
    }

    fn means(&self) -> Vec<f64> {
        self.inner.means()
    }

    fn variances(&self) -> Vec<f64> {
        self.inner.variances()
    }

    /// `(arm, unique)`: the lowest-index maximizer of the means (1-based)
    /// and whether it is the unique maximizer.
    fn optimal_arm(&self) -> (u32, bool) {
        let opt = env::optimal_arm(&self.inner);
        (opt.arm.0, opt.unique)
    }

    /// Per-arm suboptimality gaps relative to the best mean.
    fn gaps(&self) -> Vec<f64> {
        env::gaps(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Instance(k={}, means={:?})", self.inner.k(), self.inner.means())
    }
}

/// An immutable policy description.
#[pyclass(frozen, name = "Policy", skip_from_py_object)]
#[derive(Clone)]
struct PyPolicy {
    inner: PolicySpec,
}

#[pymethods]
impl PyPolicy {
    /// Upper-confidence policy with index `mean + sqrt(alpha ln t / n)`.
    #[staticmethod]
    fn ucb1(alpha: f64) -> PyResult<Self> {
        Ok(Self { inner: PolicySpec::ucb1(alpha).map_err(value_err)? })
    }

    /// Fixed-confidence UCB. Give either `delta` in (0, 1) or `d >= 2`
    /// for the horizon-derived confidence `T^-d`.
    #[staticmethod]
    #[pyo3(signature = (d=None, delta=None))]
    fn ucb_delta(d: Option<f64>, delta: Option<f64>) -> PyResult<Self> {
        let inner = match (d, delta) {
            (Some(d), None) => PolicySpec::ucb_delta_horizon(d).map_err(value_err)?,
            (None, Some(delta)) => PolicySpec::ucb_delta_explicit(delta).map_err(value_err)?,
            _ => return Err(value_err("give exactly one of d or delta")),
        };
        Ok(Self { inner })
    }

    /// Thompson sampling with Beta(alpha0, beta0) priors on 0/1 rewards.
    #[staticmethod]
    #[pyo3(signature = (alpha0=1.0, beta0=1.0))]
    fn ts_bernoulli(alpha0: f64, beta0: f64) -> PyResult<Self> {
        Ok(Self { inner: PolicySpec::ts_bernoulli(alpha0, beta0).map_err(value_err)? })
    }

    /// Thompson sampling with Normal priors and known observation variance.
    #[staticmethod]
    #[pyo3(signature = (prior_mean=0.0, prior_var=1.0, obs_var=1.0))]
    fn ts_gaussian(prior_mean: f64, prior_var: f64, obs_var: f64) -> PyResult<Self> {
        Ok(Self {
            inner: PolicySpec::ts_gaussian(prior_mean, prior_var, obs_var).map_err(value_err)?,
        })
    }

    /// Explore uniformly with probability eps, otherwise play the best
    /// empirical mean.
    #[staticmethod]
    fn eps_greedy(eps: f64) -> PyResult<Self> {
        Ok(Self { inner: PolicySpec::eps_greedy(eps).map_err(value_err)? })
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind_name()
    }

    fn __repr__(&self) -> String {
        format!("Policy({:?})", self.inner)
    }
}

/// One run of any design, reduced to plain Python data. Trajectories are
/// lists of `(arm, reward, replayed)` tuples with 1-based arms.
#[pyclass(frozen, name = "RunRecord")]
struct PyRunRecord {
    #[pyo3(get)]
    theta: f64,
    #[pyo3(get)]
    reward_sum0: f64,
    #[pyo3(get)]
    reward_sum1: f64,
    #[pyo3(get)]
    n_env: u64,
    #[pyo3(get)]
    n_replay: u64,
    #[pyo3(get)]
    pulls0: Vec<u32>,
    #[pyo3(get)]
    pulls1: Vec<u32>,
    #[pyo3(get)]
    trajectory0: Vec<(u32, f64, bool)>,
    #[pyo3(get)]
    trajectory1: Vec<(u32, f64, bool)>,
}

#[pymethods]
impl PyRunRecord {
    fn __repr__(&self) -> String {
        format!(
            "RunRecord(theta={}, n_env={}, n_replay={})",
            self.theta, self.n_env, self.n_replay
        )
    }
}

fn traj_tuples(traj: &Trajectory) -> Vec<(u32, f64, bool)> {
    traj.steps()
        .iter()
        .map(|s| (s.arm.0, s.reward, s.source == RewardSource::Replay))
        .collect()
}

fn record_from(traj0: &Trajectory, traj1: &Trajectory, n_env: u64, n_replay: u64, k: u32) -> PyRunRecord {
    PyRunRecord {
        theta: traj1.total_reward() - traj0.total_reward(),
        reward_sum0: traj0.total_reward(),
        reward_sum1: traj1.total_reward(),
        n_env,
        n_replay,
        pulls0: traj0.pull_counts(k),
        pulls1: traj1.pull_counts(k),
        trajectory0: traj_tuples(traj0),
        trajectory1: traj_tuples(traj1),
    }
}

/// Independent-runs design: both policies sample the environment on every
/// period (2T interactions).
#[pyfunction]
#[pyo3(signature = (policy0, policy1, instance, horizon, master_seed, run_index=0))]
fn run_naive(
    policy0: &PyPolicy,
    policy1: &PyPolicy,
    instance: &PyInstance,
    horizon: u32,
    master_seed: u64,
    run_index: u64,
) -> PyResult<PyRunRecord> {
    let mut s = RunStreams::for_run(master_seed, run_index);
    let (t0, t1) = designs::run_naive(&policy0.inner, &policy1.inner, &instance.inner, horizon, &mut s)
        .map_err(value_err)?;
    Ok(record_from(&t0, &t1, 2 * u64::from(horizon), 0, instance.inner.k()))
}

/// Artificial-replay design: the control policy runs first, the treatment
/// policy replays its logged rewards for matching arms (earliest unused
/// first) and queries the environment only when the log is exhausted.
#[pyfunction]
#[pyo3(signature = (policy0, policy1, instance, horizon, master_seed, run_index=0))]
fn run_ar(
    policy0: &PyPolicy,
    policy1: &PyPolicy,
    instance: &PyInstance,
    horizon: u32,
    master_seed: u64,
    run_index: u64,
) -> PyResult<PyRunRecord> {
    let mut s = RunStreams::for_run(master_seed, run_index);
    let rec = designs::run_ar(&policy0.inner, &policy1.inner, &instance.inner, horizon, &mut s)
        .map_err(value_err)?;
    Ok(record_from(&rec.traj0, &rec.traj1, rec.n_env, rec.n_replay, instance.inner.k()))
}

/// Replay design with the deployment order reversed (treatment first);
/// the returned record keeps the original role slots.
#[pyfunction]
#[pyo3(signature = (policy0, policy1, instance, horizon, master_seed, run_index=0))]
fn run_ar_swapped(
    policy0: &PyPolicy,
    policy1: &PyPolicy,
    instance: &PyInstance,
    horizon: u32,
    master_seed: u64,
    run_index: u64,
) -> PyResult<PyRunRecord> {
    let mut s = RunStreams::for_run(master_seed, run_index);
    let rec =
        designs::run_ar_swapped(&policy0.inner, &policy1.inner, &instance.inner, horizon, &mut s)
            .map_err(value_err)?;
    Ok(record_from(&rec.traj0, &rec.traj1, rec.n_env, rec.n_replay, instance.inner.k()))
}

/// Shared-reward-stack simulation: both policies read the same pre-drawn
/// per-arm reward stacks without interfering.
#[pyfunction]
#[pyo3(signature = (policy0, policy1, instance, horizon, master_seed, run_index=0))]
fn run_shared_stack(
    policy0: &PyPolicy,
    policy1: &PyPolicy,
    instance: &PyInstance,
    horizon: u32,
    master_seed: u64,
    run_index: u64,
) -> PyResult<PyRunRecord> {
    let mut s = RunStreams::for_run(master_seed, run_index);
    let (t0, t1, stacks) =
        designs::run_shared_stack(&policy0.inner, &policy1.inner, &instance.inner, horizon, &mut s)
            .map_err(value_err)?;
    let (n_env, n_replay) = stacks.read_counts();
    Ok(record_from(&t0, &t1, n_env, n_replay, instance.inner.k()))
}

/// Regret of a recorded trajectory against the instance's best mean.
#[pyfunction]
fn regret(instance: &PyInstance, trajectory: Vec<(u32, f64, bool)>) -> f64 {
    let traj = Trajectory::from_steps(
        trajectory
            .into_iter()
            .map(|(arm, reward, replayed)| designs::Step {
                arm: ArmId(arm),
                reward,
                source: if replayed { RewardSource::Replay } else { RewardSource::Environment },
            })
            .collect(),
    );
    env::regret(&instance.inner, &traj)
}

/// Student-t quantile: the x with CDF(x; df) = p.
#[pyfunction]
fn t_quantile(p: f64, df: u32) -> PyResult<f64> {
    stats::t_quantile(p, df).map_err(value_err)
}

/// `(mean, lo, hi)`: two-sided Student-t confidence interval for the mean
/// of the given estimator samples.
#[pyfunction]
fn confidence_interval(samples: Vec<f64>, alpha: f64) -> PyResult<(f64, f64, f64)> {
    let m = samples.len();
    if m < 2 {
        return Err(value_err("need at least two samples"));
    }
    let mean = stats::mean(&samples);
    let var = stats::sample_variance(&samples).expect("m >= 2");
    let t = stats::t_quantile(1.0 - alpha / 2.0, m as u32 - 1).map_err(value_err)?;
    let half = t * (var / m as f64).sqrt();
    Ok((mean, mean - half, mean + half))
}

/// Runs the experiment described by a JSON config string and returns the
/// result table as CSV text (same schema as the CLI).
#[pyfunction]
fn run_experiment(config_json: &str) -> PyResult<String> {
    let cfg = harness::ExperimentConfig::from_json(config_json).map_err(value_err)?;
    let table = harness::run_experiment(&cfg).map_err(value_err)?;
    let mut buf = Vec::new();
    harness::emit_csv(&table, &mut buf).map_err(value_err)?;
    String::from_utf8(buf).map_err(value_err)
}

/// Prior-averaged replay experiment (the config needs a `bayes` block);
/// returns CSV text.
#[pyfunction]
fn run_bayes(config_json: &str) -> PyResult<String> {
    let cfg = harness::ExperimentConfig::from_json(config_json).map_err(value_err)?;
    let table = harness::run_bayes(&cfg).map_err(value_err)?;
    let mut buf = Vec::new();
    harness::emit_bayes_csv(&table, &mut buf).map_err(value_err)?;
    String::from_utf8(buf).map_err(value_err)
}

/// Equivalence battery between the replay design and the shared-stack
/// simulation (plus naive marginals) at the config's first horizon;
/// returns the report table as CSV text.
#[pyfunction]
#[pyo3(signature = (config_json, m=None))]
fn check_equivalence(config_json: &str, m: Option<usize>) -> PyResult<String> {
    let cfg = harness::ExperimentConfig::from_json(config_json).map_err(value_err)?;
    cfg.validate().map_err(value_err)?;
    let instance = cfg.instance.build("instance").map_err(value_err)?;
    let pi0 = cfg.policy0.build("policy0").map_err(value_err)?;
    let pi1 = cfg.policy1.build("policy1").map_err(value_err)?;
    let reports = arbandit::equivtest::check_equivalence(
        &pi0,
        &pi1,
        &instance,
        cfg.horizons[0],
        m.unwrap_or(cfg.m_var),
        cfg.master_seed,
        0.01,
    )
    .map_err(value_err)?;
    let mut buf = Vec::new();
    harness::emit_test_reports_csv(&reports, &mut buf).map_err(value_err)?;
    String::from_utf8(buf).map_err(value_err)
}

/// JSON text of a built-in preset (example1, example2, example3).
#[pyfunction]
fn preset_config(name: &str) -> PyResult<String> {
    harness::preset(name)
        .map(|cfg| cfg.to_json())
        .ok_or_else(|| value_err(format!("unknown preset {name:?}")))
}

#[pymodule]
fn arbandit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_class::<PyPolicy>()?;
    m.add_class::<PyRunRecord>()?;
    m.add_function(wrap_pyfunction!(run_naive, m)?)?;
    m.add_function(wrap_pyfunction!(run_ar, m)?)?;
    m.add_function(wrap_pyfunction!(run_ar_swapped, m)?)?;
    m.add_function(wrap_pyfunction!(run_shared_stack, m)?)?;
    m.add_function(wrap_pyfunction!(regret, m)?)?;
    m.add_function(wrap_pyfunction!(t_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(confidence_interval, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(run_bayes, m)?)?;
    m.add_function(wrap_pyfunction!(check_equivalence, m)?)?;
    m.add_function(wrap_pyfunction!(preset_config, m)?)?;
    Ok(())
}
