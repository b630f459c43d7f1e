//! Experiment driver for the periodic-environment solvers: JSON configs,
//! CSV/JSON artifacts and the `perenv` command line.

pub mod analysis;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

pub use config::{Experiment, ExperimentConfig};
pub use error::{LabError, LabResult};
pub use experiments::{run_experiment, Outcome};
