//! Error type shared across the library.

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum DrtError {
    /// An argument was outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An enumeration value or option combination was not recognized.
    #[error("configuration error: {0}")]
    Config(String),

    /// Matrix or vector dimensions do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A linear system was singular to working precision.
    #[error("singular system: {0}")]
    Singular(String),

    /// Adaptive quadrature could not reach the requested tolerance.
    #[error("quadrature did not converge: requested {requested:e}, achieved {achieved:e}")]
    QuadratureTolerance { requested: f64, achieved: f64 },

    /// An iterative solver ran out of iterations. Carries the best iterate
    /// found so far together with its KKT residual.
    #[error("iteration limit {max_iter} reached (kkt residual {kkt_residual:e})")]
    IterationLimit {
        max_iter: usize,
        kkt_residual: f64,
        best: Vec<f64>,
    },

    /// Every candidate in a selection sweep failed to solve.
    #[error("selection failed: {0}")]
    Selection(String),

    /// An internal invariant that should hold by construction was violated.
    #[error("invariant violation: {0}")]
    Invariant(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, DrtError>;
