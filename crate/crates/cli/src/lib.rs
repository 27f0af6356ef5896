//! Command-line driver for channel charting experiments: configuration,
//! file formats and the generate / init / train / eval / chart / compare
//! verbs.

pub mod chart;
pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod model;

pub use commands::{Arm, CompareReport};
pub use config::ExperimentConfig;
pub use error::{CliError, Result};
pub use model::Model;
