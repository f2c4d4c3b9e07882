//! Job-file driven front end for the threshold-spectral library.
//!
//! A job is a single json document naming a command, a potential, and the
//! discretization; [`job`] parses and validates it, [`run`] executes it,
//! and [`emit`] writes the report as json and/or flat csv tables. The
//! binary wires these together and maps error classes to exit codes.

// Validation guards are written `!(x > bound)` so that NaN fails them;
// the un-negated comparison would wave NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod emit;
pub mod job;
pub mod run;

pub use emit::{emit, Format};
pub use job::{CliError, Command, GridParams, JobSpec};
pub use run::{run, Report, Results};

/// Result alias for the CLI layer.
pub type CliResult<T> = std::result::Result<T, CliError>;
