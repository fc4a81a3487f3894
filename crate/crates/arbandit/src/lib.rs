//! arbandit — a simulation and statistics toolkit for comparing two
//! multi-armed bandit policies in online experiments.
//!
//! The toolkit implements two experimental designs over a fixed bandit
//! instance: the naive design (each policy runs against its own independent
//! environment) and the artificial-replay design (the treatment policy
//! reuses the control policy's logged rewards for matching arms and only
//! queries the environment when the log runs out). A third runner simulates
//! both policies against shared pre-drawn reward stacks, which is
//! distributionally equivalent to artificial replay and serves as its
//! cross-check oracle.
//!
//! On top of the runners sit replication statistics (treatment-effect
//! estimators, Student-t confidence intervals, variance reports),
//! equivalence and symmetry test batteries, and a config-driven experiment
//! harness with CSV output. See the `arbandit` binary for the CLI.

pub mod designs;
pub mod env;
pub mod equivtest;
pub mod harness;
pub mod policies;
pub mod stats;
pub mod streams;

pub use designs::{
    count_pulls, interaction_counts, run_ar, run_ar_swapped, run_naive, run_shared_stack,
    ArRunRecord, Design, RewardSource, RewardStacks, Step, Trajectory,
};
pub use env::{gaps, optimal_arm, regret, sample_reward, ArmDistribution, ArmId, BanditInstance};
pub use policies::{action_distribution, select, update, PolicySpec, PolicyState};
pub use stats::{
    centered_arm_sum, confidence_interval, summarize, t_quantile, theta_hat, variance_report,
    ReplicationSummary, RunOutput,
};
pub use streams::RunStreams;
