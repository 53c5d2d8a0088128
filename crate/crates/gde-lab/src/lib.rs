//! Scenario runner around the gde-core pipelines: parse a config, run one
//! scenario, emit a versioned report plus CSV/JSON artifacts.

pub mod config;
pub mod report;
pub mod scenario;

pub use config::{Scenario, ScenarioConfig};
pub use report::{Check, RunReport, SCHEMA_VERSION};
pub use scenario::{run_scenario, ScenarioOutcome};
