//! Experiment runner for unimodal ordinal classifiers.
//!
//! Reads datasets and experiment configs, trains every configured loss over
//! a set of seeds, and writes run records, training curves, checkpoints and
//! comparison tables.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checkpoint;
pub mod config;
pub mod csv_io;
pub mod error;
pub mod manifest;
pub mod record;
pub mod run;
pub mod table;

pub use error::{CliError, Result};
