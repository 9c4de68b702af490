//! Benchmark harness: manifests, metrics, result tables and plots.

pub mod experiment;
pub mod metrics;
pub mod plot;

pub use experiment::{run_experiment, write_outputs, Manifest, RunOptions, Variant};
pub use metrics::{compare_gaps, compute_gap, MetricsRow};
