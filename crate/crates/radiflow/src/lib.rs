//! File formats, experiment harness and command-line front end for
//! `radiflow-core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod harness;
pub mod initial;
pub mod persist;
pub mod report;

pub use error::{AppError, AppResult};
