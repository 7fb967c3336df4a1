//! Scenario runner for warped-product curvature and flow experiments.
//!
//! A scenario is a JSON file naming one mode and its section. [`run::run`]
//! executes it and writes CSV and JSON files into an output directory.

pub mod config;
pub mod error;
pub mod model;
pub mod output;
pub mod run;

pub use config::{Mode, ScenarioConfig};
pub use error::{exit, CliError};
pub use run::{run, Outcome, Status};
