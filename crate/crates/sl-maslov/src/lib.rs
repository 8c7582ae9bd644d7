//! File formats, configuration, reports and the command runner for the
//! `sl-maslov` binary.

pub mod bundled;
pub mod config;
pub mod error;
pub mod format;
pub mod report;
pub mod run;

pub use config::{parse_config, Command, Parsed, RunConfig};
pub use error::CliError;
pub use run::{execute, run};
