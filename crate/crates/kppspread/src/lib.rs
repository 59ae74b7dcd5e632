//! Configuration files, CSV and certificate formats, and the command
//! runner for `kppspread-core`.
//!
//! A run is described by one TOML file (see [`config`]); [`run`] executes
//! it and returns an [`Outcome`] whose exit code is `0` on success and `4`
//! when a certificate check fails. Errors carry their own exit codes
//! (`2` configuration, `3` numerical failure).

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod record;
pub mod table;

pub use commands::{execute as run, Outcome};
pub use config::{Command, RunConfig};
pub use error::{CliError, Result};
