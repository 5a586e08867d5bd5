//! Reproducible experiment runner: configuration, checks, artifacts and sweeps.

pub mod artifacts;
pub mod config;
pub mod experiment;
pub mod sweep;

pub use artifacts::{execute, verify_run, write_run, Manifest, RunOutput, RunReport, VerifyReport};
pub use config::{CheckKind, CheckSpec, ExperimentConfig, InitialKind, REFERENCE_CONFIG, SWEEP_AXES};
pub use experiment::{CheckOutcome, Experiment, Table};
pub use sweep::{run_sweep, with_workers, SweepReport, SweepRow};
