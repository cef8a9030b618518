//! Scenario-driven front end for `conley-core`: TOML configs, task dispatch,
//! table and snapshot output, and the acceptance battery.

pub mod config;
pub mod error;
pub mod report;
pub mod run;
pub mod suite;

pub use config::{ScenarioConfig, Task};
pub use error::{CliError, Result};
pub use report::{emit_tables, Format, RunReport, Table};
pub use run::{run_scenario, run_with_threads};
