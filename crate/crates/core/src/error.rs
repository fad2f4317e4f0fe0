use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates its physical or structural invariant.
    #[error("invalid {name}: {reason}")]
    Domain { name: &'static str, reason: String },

    #[error("state became non-finite at t = {t}")]
    NonFinite { t: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("sequence length mismatch: {what} (expected {expected}, got {actual})")]
    Length {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("training diverged at epoch {epoch}: J = {cost} (initial {initial})")]
    Diverged { epoch: usize, cost: f64, initial: f64 },

    #[error("malformed checkpoint, line {line}: {reason}")]
    Checkpoint { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures caused by the numerics (instability, divergence)
    /// rather than by configuration or I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonFinite { .. } | Error::Diverged { .. })
    }
}
