//! Configuration loading, figure presets and result export for the
//! `simulate` binary.

pub mod config;
pub mod error;
pub mod experiment;
pub mod output;

pub use config::{ExperimentKind, ResolvedConfig};
pub use error::CliError;
pub use experiment::{run_experiment, ExperimentSpec};
