//! Command-line front end for the loop source models.
//!
//! Every command produces a [`table::Table`] that is written as CSV or JSON.

pub mod args;
pub mod commands;
pub mod error;
pub mod feasibility;
pub mod figures;
pub mod params;
pub mod table;

pub use args::Cli;
pub use commands::{analytic_reference, emit, run, AnalyticReference};
pub use error::{CliError, CliResult};
pub use table::{Table, Value};
