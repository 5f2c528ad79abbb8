//! Experiment harness: configuration resolution, seeded end-to-end pipeline
//! runs, repeat orchestration, metric aggregation and file outputs.

mod config;
mod pipeline;
mod report;

pub use config::{
    Algorithm, ExperimentConfig, GridOverrides, HmsOverrides, Nea2Overrides, SpreadOverrides,
};
pub use pipeline::{run_pipeline, FittedRegion, PipelineRun, RunRecord, StageSnapshot};
pub use report::{
    aggregate, metrics_csv, run_experiment, run_sweep, RunReport, Stat, METRIC_COLUMNS,
};
