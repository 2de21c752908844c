//! Experiment plumbing for `robopt`: JSON configs, seeded replications, CSV
//! results, the query-scaling study, and the acceptance suites.

pub mod config;
pub mod error;
pub mod instance;
pub mod run;
pub mod study;
pub mod suites;

pub use config::{Algorithm, ExperimentConfig, InstanceSpec, Overrides};
pub use error::{HarnessError, Result};
pub use instance::Instance;
pub use run::{run_experiment, ResultRow};
pub use study::{scaling_study, Axis, ScalingFamily, StudyReport};
