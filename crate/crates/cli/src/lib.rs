//! File formats, reports and the command-line front end for `actsched-core`.

pub mod commands;
pub mod error;
pub mod files;
pub mod report;
pub mod reproduce;

pub use commands::{run, Cli};
pub use error::{CliError, CliResult};
