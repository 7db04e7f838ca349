//! Closed-loop experiments, run configuration and trajectory export.

mod config;
mod export;
mod run;

pub use config::{OutputFormat, RunConfig, ScenarioKind};
pub use export::{RegretColumns, TrajectoryRecord, TrajectoryRow, Truncation};
pub use run::{error_record, run, run_replications, run_seeded, Objective, RunOutput, RunSummary};
