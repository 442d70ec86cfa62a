//! Experiment matrices, run bookkeeping, interchange checks and result tables.

mod plan;
mod registry;
mod report;
mod validate;

pub use plan::{plan_runs, CorpusEntry, ExperimentConfig, ExperimentPlan, MatrixConfig, PlannedRun, RunConfig, RunSpec};
pub use registry::{Artifacts, Registry, RunRecord, RunStatus, REGISTRY_FILE, SNAPSHOT_FILE};
pub use report::{derive_baselines, emit_report, BaselineEntry, Comparison, ReportDocument};
pub use validate::{validate_interchange, InterchangeKind, Violation};
