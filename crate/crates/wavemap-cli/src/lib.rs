//! Batch runner for the wavemap laboratory.
//!
//! A run is one JSON [`config::RunConfig`]; a manifest is a list of named
//! runs. Every run writes `manifest.json` (the validated config), its tables
//! and reports, `summary.json` (metrics and declared checks) and
//! `timing.json` (wall-clock values, excluded from reproducibility).

pub mod config;
pub mod error;
pub mod experiments;
pub mod runner;

pub use config::{Kind, Manifest, Overrides, RunConfig};
pub use error::{CliError, CliResult};
pub use runner::{reproduce_all, run, Report, RunOutcome};
