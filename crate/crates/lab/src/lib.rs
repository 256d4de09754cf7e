//! Experiments, report files and the command line on top of `tbm-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod harness;
pub mod output;
pub mod report;
pub mod verify;

pub use config::{ExperimentConfig, ExperimentKind, ReferenceKind, Statistic};
pub use error::{LabError, Result};
pub use harness::{run_esd_experiment, run_experiment, run_mixed_trace_experiment, run_moment_experiment, sample_direct_goe};
pub use report::{load_report, persist_report, ExperimentReport, SCHEMA_VERSION};
pub use verify::verify_report;
