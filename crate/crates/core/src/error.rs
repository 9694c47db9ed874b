//! Error type shared by every module of the crate.

use thiserror::Error;

/// Crate-wide error type.
///
/// The variants group into three severities, surfaced by the CLI as exit
/// codes: usage/validation problems (2), solver or resource exhaustion (3),
/// and numeric-integrity violations (4). An integrity violation means a
/// computed quantity contradicted an identity it must satisfy, which signals
/// a solver bug or a misapplied formula rather than bad input.
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition not met: {0}")]
    Precondition(String),

    #[error("capability exceeded: {0}")]
    Capability(String),

    #[error("continued fraction too shallow: need index {needed}, have {available}")]
    Depth { needed: usize, available: usize },

    #[error("x outside census range: log x = {log_x}, census cutoff = {cutoff}")]
    OutOfCensus { log_x: f64, cutoff: f64 },

    #[error("solver failed: {0}")]
    Solver(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("accuracy: {0}")]
    Accuracy(String),

    #[error("numeric integrity violated: {0}")]
    NumericIntegrity(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code a CLI should report for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_)
            | Error::Domain(_)
            | Error::Precondition(_)
            | Error::Capability(_)
            | Error::Depth { .. }
            | Error::OutOfCensus { .. }
            | Error::Io(_) => 2,
            Error::Solver(_) | Error::Resource(_) | Error::Accuracy(_) => 3,
            Error::NumericIntegrity(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
