use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Scalar root finding failed; the message carries the bracket that was tried.
    #[error("solver error: {0}")]
    Solver(String),

    #[error("oracle error: {0}")]
    Oracle(String),

    /// The energy minimizer stopped without reaching the gradient tolerance.
    /// `best` holds the lowest-energy iterate seen.
    #[error("no convergence after {iterations} iterations: {reason} (gradient norm {grad_norm:.3e})")]
    NonConvergence {
        iterations: usize,
        grad_norm: f64,
        reason: String,
        best: Vec<f64>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
