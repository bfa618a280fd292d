//! Configuration, file formats and drivers around `nsfp-core`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod diagnostics;
pub mod dump;
pub mod run;
pub mod selftest;

pub use config::{parse_config, Config, ConfigError, ValidationError};
pub use run::{check_energy, run_simulation, CheckReport, RunSummary};
