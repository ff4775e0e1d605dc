//! Experiment configuration, convergence studies, order fits, probe sweeps
//! and report emission.

pub mod config;
pub mod fit;
pub mod initial;
pub mod probe;
pub mod report;
pub mod study;

pub use config::{ErrorNorm, ExperimentConfig, InitialData};
pub use fit::{fit_order, OrderFit};
pub use initial::make_initial_data;
pub use probe::{run_probes, ProbeReport};
pub use report::emit_report;
pub use study::{run_convergence_study, ConvergenceReport, Measure, Setup};
