use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("torus grid needs an even number of cells >= 8, got {0}")]
    InvalidGrid(usize),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("grids differ: {0} cells vs {1} cells")]
    GridMismatch(usize, usize),

    #[error("negative density {value:e} in cell {index}")]
    NegativeDensity { index: usize, value: f64 },

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("spectrum is not conjugate symmetric at frequency {frequency} (defect {defect:e})")]
    BrokenSymmetry { frequency: i64, defect: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("total masses differ: {0} vs {1}")]
    MassMismatch(f64, f64),

    #[error("time step {dt:e} exceeds the positivity bound {bound:e}")]
    CflViolation { dt: f64, bound: f64 },

    #[error("velocity blow-up at t = {t}: admissible step {dt:e} fell below dt_min = {dt_min:e}")]
    VelocityBlowUp { t: f64, dt: f64, dt_min: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
