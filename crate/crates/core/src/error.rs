//! Error taxonomy shared by the whole pipeline.

use thiserror::Error;

/// All failure modes of the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A matrix that must be symmetric is not.
    #[error("matrix `{0}` is not symmetric")]
    NotSymmetric(&'static str),
    /// The X block of a saddle-point matrix is not positive definite.
    #[error("block X is not positive definite")]
    NotPositiveDefiniteX,
    /// The Y block of a saddle-point matrix is not positive semidefinite.
    #[error("block Y is not positive semidefinite")]
    NotPositiveSemidefiniteY,
    /// The Z block does not have full row rank.
    #[error("block Z is rank deficient (rank {rank}, expected {expected})")]
    RankDeficientZ { rank: usize, expected: usize },
    /// Inconsistent matrix or vector dimensions.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    /// The dense eigenvalue solver did not converge or produced
    /// eigenpairs above the residual tolerance.
    #[error("eigenvalue solver failed: {0}")]
    EigenSolverFailure(String),
    /// An operation that assumes Y = 0 received a nonzero Y block.
    #[error("operation requires Y = 0")]
    NonzeroY,
    /// The spectrum is not contained in the open right half-plane.
    #[error("spectrum is not contained in the open right half-plane")]
    UnstableSpectrum,
    /// The mass matrix failed to factor; signals an invariant violation.
    #[error("mass matrix is singular or not positive definite")]
    SingularMass,
    /// Model parameters violate their documented ranges.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    /// The potential Hessian at the equilibrium is not positive definite,
    /// so the equilibrium is not an isolated minimum.
    #[error("potential Hessian at the equilibrium is not positive definite")]
    IndefiniteHessian,
    /// The effective damping R = D(q*,0) + K_t is not positive definite.
    #[error("effective damping R is not positive definite")]
    IndefiniteR,
    /// A matrix expected to be positive definite is not.
    #[error("matrix `{0}` is not positive definite")]
    NotPositiveDefinite(&'static str),
    /// The similarity identity N W = -W A failed verification.
    #[error("similarity transform verification failed: {0}")]
    TransformMismatch(String),
    /// The damping-ratio target is outside (0, 1].
    #[error("damping-ratio target must lie in (0, 1], got {0}")]
    InvalidZeta(f64),
    /// Bracket growth for the conservative gain search exceeded its cap.
    #[error("gain bracketing exceeded kappa = {0:.3e}; model is ill-scaled")]
    BracketFailure(f64),
    /// A gain produced by a tuning rule failed its spectrum verification.
    #[error("tuned spectrum verification failed: {0}")]
    SpectrumVerification(String),
    /// The state matrix A has eigenvalues with nonnegative real part.
    #[error("state matrix is not Hurwitz")]
    NotHurwitz,
    /// The Lyapunov equation solve failed or left a large residual.
    #[error("Lyapunov solve failed: {0}")]
    SolveFailure(String),
    /// The remainder bound is violated already at the smallest grid radius.
    #[error("remainder bound fails at the smallest sampled radius {0:.3e}")]
    NoValidRadius(f64),
    /// Integration blew up; reports the step and time of failure.
    #[error("non-finite state at step {step} (t = {time:.6} s)")]
    NonFiniteState { step: usize, time: f64 },
}

impl Error {
    /// Whether this error is an input-validation failure (CLI exit code 1)
    /// as opposed to a numerical failure (exit code 2).
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::NotSymmetric(_)
                | Error::NotPositiveDefiniteX
                | Error::NotPositiveSemidefiniteY
                | Error::RankDeficientZ { .. }
                | Error::DimensionMismatch(_)
                | Error::NonzeroY
                | Error::InvalidParams(_)
                | Error::NotPositiveDefinite(_)
                | Error::InvalidZeta(_)
        )
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
