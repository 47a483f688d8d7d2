//! Scenario-driven front end: parse a JSON scenario, run it, and persist
//! CSV and JSON artifacts next to a copy of the scenario.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod inputs;
mod run;
pub mod scenario;

pub use error::{exit, CliError, ErrorRecord};
pub use run::{execute, run, Check, RunOptions, RunRecord, CALIBRATION_ENV};
pub use scenario::{parse_scenario, parse_scenario_as, Mode, Scenario};
