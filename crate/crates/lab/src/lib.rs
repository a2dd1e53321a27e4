//! Command-line front end for `sde-tv-core`: configuration files and flags,
//! a rayon executor, experiment dispatch and CSV output.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod parallel;

pub use config::{Experiment, ExperimentConfig, RawConfig};
pub use error::LabError;
pub use parallel::RayonExecutor;
