use thiserror::Error;

/// Error variants shared by the whole crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An input outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested accuracy cannot be met within the configured mode cap.
    #[error("accuracy error: truncation radius {needed} exceeds max_modes {cap}")]
    Accuracy { needed: usize, cap: usize },

    /// Quadrature resolution insufficient for the requested tolerance.
    #[error("quadrature resolution insufficient: {0}")]
    Quadrature(String),

    /// The semi-discrete solver failed to reach its mass tolerance.
    #[error("solver did not converge after {iters} iterations (final mass residual {final_residual:.3e})")]
    Convergence {
        iters: usize,
        final_residual: f64,
        /// Mass residual after each accepted iteration.
        residual_trajectory: Vec<f64>,
    },

    /// A Monte Carlo replica failed; carries the failing stream identity.
    #[error("replica failed (seed {seed}, replica {replica}): {source}")]
    Replica {
        seed: u64,
        replica: u64,
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Error {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Error {
        Error::Domain(msg.into())
    }
}
