//! Scenario runner for the boltzlab laboratory: TOML configs in, manifest,
//! reports and CSV series out.

pub mod bench;
pub mod config;
pub mod runner;

pub use config::{Config, ConfigError, GridSpec, InitialSpec, Scenario, ScenarioKind, ESTIMATES};
pub use runner::{
    amplitude_sweep, initial_field, run_config, run_estimate, verdicts_monotone, Certificate, CliError, Manifest,
    RunOptions, ScenarioOutcome, SweepRow,
};
