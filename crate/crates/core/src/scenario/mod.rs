//! Scenario files, verification runs and report output.

mod config;
mod report;
mod run;
mod series;

pub use config::{example_config, Numerics, OutputTable, ScenarioConfig, SeriesFormat, SolitonTable, Suite};
pub use report::{CheckRecord, Environment, ReportDocument, Status, Summary};
pub use run::{run_config, run_scenario, RunOptions, ScenarioOutput, MC_SIGMAS, ORACLE_TOL, RATIO_TOL, RESIDUAL_TOL, SLOPE_TOL};
pub use series::{emit_series, parse_csv, Series};

/// Suite names with one-line descriptions.
pub fn list_checks() -> Vec<(&'static str, &'static str)> {
    Suite::ALL.iter().map(|s| (s.name(), s.description())).collect()
}
