//! Config-driven experiment pipeline: named systems, the end-to-end
//! runner, metastable clustering, and convergence studies.

pub mod cluster;
pub mod config;
pub mod convergence;
pub mod experiment;
pub mod report;
pub mod systems;

pub use cluster::cluster_metastable;
pub use config::{ExperimentConfig, Mode, SamplingMethod, SystemId};
pub use convergence::{convergence_study, ConvergenceRow};
pub use experiment::{run_experiment, ExperimentOutput, ExperimentReport};
