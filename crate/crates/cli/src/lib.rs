//! Experiment harness for the theta sweep: configuration, the sweep runner,
//! report writing, and SVG rendering. The `a2sbnn` binary is a thin shell
//! over this library so the whole pipeline stays testable in-process.

pub mod config;
pub mod plots;
pub mod report;
pub mod sweep;

pub use config::ExperimentConfig;
pub use sweep::{run_sweep, MetricsReport, SweepOutput};
