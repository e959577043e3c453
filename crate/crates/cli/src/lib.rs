//! Scenario files, commands and reports behind the `mimo-diag` binary.

pub mod bundled;
pub mod commands;
pub mod report;
pub mod scenario;

pub use commands::{cmd_cr, cmd_design, cmd_ic, cmd_verify, CommandError, Method};
pub use report::{Check, DesignEntry, RunReport};
pub use scenario::{load_scenario, parse_scenario, Scenario, ScenarioError, ScenarioFile, ScenarioKind};
