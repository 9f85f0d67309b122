//! Command-line front end: configuration, runs and reproducible output.

pub mod config;
pub mod error;
pub mod output;
pub mod run;
pub mod verify;

pub use config::{Format, Mode, RunConfig};
pub use error::CliError;
pub use run::{execute, Outcome};
