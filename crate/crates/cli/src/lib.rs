//! Command-line harness for the `dropfee` library: configuration files,
//! seeded runs with CSV traces and manifests, SVG rendering, optimum search
//! and price comparisons.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod render;

pub use error::CliError;
