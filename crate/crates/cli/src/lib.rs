//! Experiment runner around `szego-core`: config loading, the four
//! experiment kinds, and report files (per-cutoff spectra, convergence
//! tables, verdict JSON).

pub mod config;
pub mod error;
pub mod experiments;
pub mod report;

pub use config::{ExperimentConfig, Overrides};
pub use error::CliError;
pub use experiments::{run_experiment, Experiment};
pub use report::Verdict;
