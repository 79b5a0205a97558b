//! Batch front end for `nrsense-core`: scenario files, sweeps, verification
//! reports and plots.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod app;
pub mod error;
pub mod run;
pub mod scenario;
pub mod svg;
pub mod table;

pub use error::CliError;
