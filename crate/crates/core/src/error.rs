use thiserror::Error;

use crate::lattice::Trajectory;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a documented invariant or precondition.
    #[error("validation error: {0}")]
    Validation(String),

    /// Amplitudes became non-finite or a linear solve broke down.
    #[error("numeric failure at step {step}: {reason}")]
    Numeric { step: usize, reason: String },

    /// The stationary-path relaxation hit its iteration cap.
    /// The best iterate (rounded to cells) is attached.
    #[error("stationary path did not converge after {iterations} sweeps (residual {residual:.3e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        best: Box<Trajectory>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn numeric(step: usize, reason: impl Into<String>) -> Self {
        Error::Numeric {
            step,
            reason: reason.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Parse(_) | Error::Io(_) => 1,
            Error::Numeric { .. } | Error::NotConverged { .. } => 2,
        }
    }
}
