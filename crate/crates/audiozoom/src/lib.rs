//! Command-line front end of `audiozoom-core`: WAV input and output, scene
//! and settings files, and intermediate dumps.

pub mod cli;
pub mod config;
pub mod dump;
pub mod error;
pub mod scenario;
pub mod wav;

pub use error::{CliError, Result};
