//! Run directories: the scenario as run, the output tables and metrics.

use std::path::Path;

use thiserror::Error;

use crate::metrics::{self, MetricsRow, METRICS_CSV};
use crate::scenario::{parse_scenario, Scenario, ScenarioError};
use crate::simulation::{self, SimError};
use crate::tables::{write_csv, TableError, Tables};

pub const SCENARIO_TOML: &str = "scenario.toml";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("metrics: {0}")]
    Metrics(String),
}

/// Runs a scenario and writes everything to `dir`.
pub fn run_to_dir(scenario: &Scenario, dir: &Path) -> Result<Tables, RunError> {
    let tables = simulation::run(scenario)?;
    write_run(scenario, &tables, dir)?;
    Ok(tables)
}

pub fn write_run(scenario: &Scenario, tables: &Tables, dir: &Path) -> Result<(), RunError> {
    tables.write_dir(dir)?;
    let path = dir.join(SCENARIO_TOML);
    std::fs::write(&path, scenario.to_toml()).map_err(|source| RunError::Io { path: path.display().to_string(), source })?;
    let rows = metrics::compute(scenario, tables).map_err(RunError::Metrics)?;
    write_csv(&dir.join(METRICS_CSV), &rows)?;
    Ok(())
}

/// Recomputes metrics from a run directory and rewrites its metrics table.
pub fn metrics_for_dir(dir: &Path) -> Result<Vec<MetricsRow>, RunError> {
    let scenario = parse_scenario(dir.join(SCENARIO_TOML))?;
    let tables = Tables::read_dir(dir)?;
    let rows = metrics::compute(&scenario, &tables).map_err(RunError::Metrics)?;
    write_csv(&dir.join(METRICS_CSV), &rows)?;
    Ok(rows)
}
