//! Config-driven experiment runner over the rkn-core integrators:
//! convergence tables, energy traces, solver-iteration studies, and
//! explicit-step stability scans, all emitted as CSV files with a
//! sidecar metadata record.

pub mod config;
pub mod experiments;
pub mod reference;

pub use config::{Experiment, ExperimentConfig, Formulation};
pub use experiments::{run_experiment, Outcome};
