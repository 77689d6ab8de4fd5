//! Batch verification runs: configuration, subcommands and reports.

pub mod config;
pub mod run;

pub use config::{Method, RunConfig};
pub use run::RunReport;
