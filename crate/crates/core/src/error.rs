//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Rejected argument: wrong dimension, bad index, out-of-range parameter.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Matrix shapes do not allow the requested operation.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Input that must be Hermitian deviates by more than the tolerance.
    #[error("matrix is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    /// Eigenvalue below the clipping floor where positive semidefiniteness is required.
    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:.3e})")]
    NotPositiveSemidefinite { eigenvalue: f64 },

    /// Iterative solver failed to reach its tolerance.
    #[error("eigensolver did not converge (off-diagonal norm {off_norm:.3e})")]
    ConvergenceFailure { off_norm: f64 },

    /// State vector amplitudes do not form a normalized state.
    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    /// Two-party marginals whose shared single-party reductions disagree.
    #[error("inconsistent marginals (deviation {deviation:.3e} exceeds tolerance {tolerance:.3e})")]
    InconsistentMarginals { deviation: f64, tolerance: f64 },

    /// Nonzero spectra of the two marginals disagree beyond tolerance.
    #[error("marginal spectra mismatch (deviation {deviation:.3e} exceeds tolerance {tolerance:.3e})")]
    SpectraMismatch { deviation: f64, tolerance: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
