// SPDX-License-Identifier: MIT OR Apache-2.0

//! Library side of the `lqcp` command: input parsing, command runners and
//! the scenario registry.

pub mod commands;
pub mod input;
pub mod report;
pub mod scenario;

pub use input::{load_adjacency_series, load_csv_matrix, Loaded};
pub use report::{rows_to_csv, Row, RunReport, Seeds, Timing};
pub use scenario::{run_scenario, Overrides, Scenario};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("i/o error: {0}")]
    Io(String),
    #[error("cannot parse {field:?} at row {row}, column {col}")]
    Parse { row: usize, col: usize, field: String },
    #[error("unknown scenario {0:?}; known: {known}", known = scenario::NAMES.join(", "))]
    UnknownScenario(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Core(#[from] lqcp_core::Error),
}
