//! Experiment harness for the chaotic MGRIT solver.
//!
//! Each experiment runs the Lorenz system through the solver (or the Lyapunov
//! estimator) and emits CSV. Final times are given in Lyapunov times
//! `T_λ = ln(10)/0.9`.

pub mod app;
pub mod csvio;
pub mod experiments;
pub mod spec;

pub use csvio::{Cell, IterationTable};
pub use experiments::{exit_code, run_fig1, run_fig3, run_lyapunov_sweep, run_solve, run_table};
pub use spec::{Command, ExperimentSpec};

/// Nominal largest Lyapunov exponent used to convert Lyapunov-time units.
pub const NOMINAL_LAMBDA0: f64 = 0.9;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Solver(#[from] mgrit_core::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, CliError>;
