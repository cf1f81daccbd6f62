use std::path::Path;

use thiserror::Error;

/// Failures that end a command, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad files, flags or configuration. Exit code 2.
    #[error("{0}")]
    Input(String),
    /// The data parsed but the computation could not produce a result. Exit code 3.
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Input(_) => 2,
            Self::Numeric(_) => 3,
        }
    }

    pub fn file(path: &Path, msg: impl std::fmt::Display) -> Self {
        Self::Input(format!("{}: {msg}", path.display()))
    }
}

impl From<hom_phase::Error> for CliError {
    fn from(e: hom_phase::Error) -> Self {
        use hom_phase::Error as E;
        match e {
            E::InconsistentDip {
                ref offending_delays,
            } => {
                let ps: Vec<String> = offending_delays
                    .iter()
                    .map(|t| format!("{:.4}", t * 1e12))
                    .collect();
                Self::Numeric(format!(
                    "inconsistent dip: mode matching exceeds 1 after the amplitude fit at delays (ps) {}",
                    ps.join(", ")
                ))
            }
            E::Degenerate(_) => Self::Numeric(e.to_string()),
            _ => Self::Input(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
