//! Scenario files, the builtin battery and the runner behind the `flagstab`
//! binary.

pub mod builtin;
pub mod classify;
pub mod error;
pub mod report;
pub mod runner;
pub mod scenario;

pub use error::{CliError, Result};
pub use runner::{run_battery, run_scenario, BatteryReport, RunOutput};
pub use scenario::{DensityInput, Dynamics, Expectation, Overrides, Scenario};
