//! Configuration parsing and workflows for the `twophoton` command.

pub mod commands;
pub mod config;

pub use commands::{run_compare, run_fit, run_pattern, run_scan, CheckFailed, CompareReport};
pub use config::{parse_config, render, ConfigError, MaskSpec, RunConfig};
