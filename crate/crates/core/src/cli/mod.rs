//! Batch front end: configuration parsing, task dispatch and CSV reports.

pub mod config;
pub mod csv;
pub mod run;
pub mod verify;

pub use config::{parse_config, ConfigError, ExperimentConfig, Task, TaskParams};
pub use run::{run, RunError, RunOptions, RunOutcome};
