use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violated a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An adaptive update drove a tap weight to a non-finite value.
    #[error("equalizer diverged at iteration {iteration}: tap weights became non-finite")]
    Diverged { iteration: usize },

    /// The estimated 2x2 autocorrelation matrix was not positive definite.
    #[error("degenerate signal: smallest eigenvalue {lambda_min} is not positive")]
    DegenerateSignal { lambda_min: f64 },

    /// Convergence metrics were requested for a run that did not complete.
    #[error("metrics unavailable: {0}")]
    Metrics(String),
}

pub type Result<T> = std::result::Result<T, Error>;
