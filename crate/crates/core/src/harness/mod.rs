//! Experiment configuration, the per-cell pipeline, sweeps and random
//! inequality checks.

mod config;
mod lemmas;
mod run;
pub mod stats;

pub use config::{
    Experiment, ExperimentConfig, GridSpec, ModelSpec, OneOrMany, PriorSpec, ProcessSpec, SeedRange,
};
pub use lemmas::{check_lemmas, LemmaSweep, LemmaViolation};
pub use run::{
    resolve_theta_star, run_cell, run_sweep, CellFailure, CellResult, GroupSummary, SweepOutcome,
    SweepSummary, Theorem2Row, MAX_FAILURE_FRACTION,
};
