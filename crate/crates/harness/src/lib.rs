//! Experiment harness: configuration, the trial loop, suites and artifact
//! persistence for the multi-objective curriculum learning engine.

pub mod config;
pub mod error;
pub mod persist;
pub mod recompute;
pub mod suite;
pub mod trial;

pub use config::{ExperimentConfig, ResolvedExperiment};
pub use error::{HarnessError, Result};
pub use trial::{run_trial, Checkpoint, GenerationReport, TrialResult, TrialRunner};
