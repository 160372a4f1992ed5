//! Config parsing, scenario dispatch and artifact writing for the
//! `relclock` command.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod scenarios;

pub use config::{parse_config, ConfigError, Overrides, Scenario, ScenarioConfig};
pub use scenarios::run_scenario;
