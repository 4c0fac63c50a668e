//! File formats and subcommands of the `sdfp` command-line tool.

pub mod commands;
pub mod error;
pub mod formats;

pub use error::{CliError, Exit};
