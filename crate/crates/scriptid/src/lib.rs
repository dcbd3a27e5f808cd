//! File formats, dataset IO and the command-line pipeline built on
//! [`scriptid_core`].

pub mod cli;
pub mod error;
pub mod features_csv;
pub mod io;
pub mod json;
pub mod kernels;
pub mod model;
pub mod report;

pub use error::{exit, CliError, Result};
