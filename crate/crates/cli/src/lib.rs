//! Ingestion, configuration and report emission for the `covthresh` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
mod error;
pub mod ingest;
pub mod output;

pub use commands::{run, Command, Outcome, Report};
pub use config::{parse_rule, ColumnMapping, OutputFormat, RunConfig};
pub use error::{CliError, CliResult};
