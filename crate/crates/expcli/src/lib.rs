//! Experiment runner for kernel discrepancy flows: presets, config parsing,
//! CSV/JSON artifacts and parallel sweeps.

// `!(x > 0.0)` is used on purpose to reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod run;
pub mod sweep;

pub use config::{ExperimentConfig, Init, Preset};
pub use run::{run_experiment, RunSummary, SERIES_HEADER};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver aborted: {0}")]
    Solver(kmdflow::Error),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Process exit status: 2 for configuration errors, 3 for solver aborts
    /// and invariant violations, 1 for I/O failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Solver(_) | Self::Invariant(_) => 3,
            Self::Io(_) => 1,
        }
    }
}

// Library errors outside the time loop come from bad parameters.
impl From<kmdflow::Error> for CliError {
    fn from(e: kmdflow::Error) -> Self {
        Self::Config(e.to_string())
    }
}
