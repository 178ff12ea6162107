//! Command-line pipeline for AC false-data-injection studies.

// NaN-rejecting checks are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod pipeline;

pub use config::ScenarioConfig;
pub use error::{CliError, Status};
