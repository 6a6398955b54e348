//! Config-driven experiment runner for the hidden-status SIR model.

pub mod config;
pub mod output;
pub mod run;

pub use config::{resolve, ConfigError, ExperimentConfig, Kind, Overrides};
pub use run::{run_experiment, RunError, RunReport};
