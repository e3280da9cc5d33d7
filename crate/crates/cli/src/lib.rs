//! Config-driven front end for `bvm-core`: scenario files, run records and
//! the built-in worked examples.

pub mod builtin;
pub mod commands;
pub mod config;
pub mod error;
pub mod record;

pub use config::{Format, ScenarioConfig};
pub use error::{CliError, Result};
pub use record::RunRecord;
