//! Command-line front end for `saga-core`: LIBSVM ingestion, a versioned
//! JSON run configuration, and the `plan`, `run` and `validate` commands.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

pub use error::CliError;
