use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("inconsistent counting budget: {0}")]
    InconsistentBudget(String),

    #[error("degenerate data: {0}")]
    Degenerate(String),

    /// Dip samples that imply a mode-matching degree above one after the amplitude fit.
    #[error("inconsistent dip: V exceeds 1 at {} delay(s), first at {:.6e} s", offending_delays.len(), offending_delays.first().copied().unwrap_or(f64::NAN))]
    InconsistentDip { offending_delays: Vec<f64> },
}

pub type Result<T> = std::result::Result<T, Error>;
