//! File formats, run configuration and reports for the `fmin-shoot` tool.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod oracle;
pub mod report;

pub use commands::run;
pub use error::{CliError, ExitKind};
