//! Configuration, file formats and the experiment runner on top of
//! `lrxy-core`.

// Negated comparisons reject NaN together with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod io;
pub mod run;

pub use config::RunConfig;
pub use error::{CliError, Diagnostic};
pub use run::{execute, verify_manifest, Command, RunManifest, RunOptions};
