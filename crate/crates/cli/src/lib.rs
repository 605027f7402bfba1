//! File formats, report emission and the `wavens` command line on top of
//! `wavens-core`.

mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod report;

pub use cli::run;
pub use error::{CliError, Result};
