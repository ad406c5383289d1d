//! Batch driver: resolves a run configuration, runs the adaptive loop and
//! writes the history, per-level meshes and the rate fit.

pub mod config;
pub mod driver;

pub use config::{parse_config, Cli, ConfigError, RunConfig};
pub use driver::{run, Outcome, RunError};
