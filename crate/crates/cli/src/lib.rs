//! Experiment harness around the `ehrelay` simulator: configuration files,
//! grid sweeps, region plots and the acceptance suite.

pub mod acceptance;
pub mod config;
pub mod error;
pub mod svg;
pub mod sweep;

pub use config::{parse_config, ExperimentConfig, GridSpec};
pub use error::{ConfigError, HarnessError};
