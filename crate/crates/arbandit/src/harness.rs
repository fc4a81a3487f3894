//! Config-driven experiment orchestration: JSON experiment descriptions,
//! built-in presets, the replication runner, and CSV emission.

mod config;
mod csvout;
mod presets;
mod runner;

pub use config::{
    BayesConfig, ConfigError, ExperimentConfig, InstanceConfig, PolicyConfig, PriorConfig,
};
pub use csvout::{emit_bayes_csv, emit_csv, emit_test_reports_csv};
pub use presets::{preset, preset_names};
pub use runner::{
    run_bayes, run_experiment, BayesRow, BayesTable, DesignStats, HarnessError, HorizonRow,
    ResultTable,
};
