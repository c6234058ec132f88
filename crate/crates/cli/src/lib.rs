//! Dataset IO, run configuration, checkpoints, sweeps and reports for the
//! `hinbal` command-line tool.

pub mod checkpoint;
pub mod config;
pub mod dataset;
pub mod error;
pub mod pipeline;
pub mod report;
pub mod sweep;

pub use error::{CliError, Result};
