//! Error type shared by every solver in the crate.

use thiserror::Error;

/// Everything that can go wrong inside the solvers.
///
/// The numerical failures (`NotPositiveDefinite`, `SingularCrossGram`,
/// `SingularSubmatrix`, ...) all indicate that a working assumption of the
/// active-set machinery was violated by the instance, usually because the
/// matrix is degenerate. They are not recoverable by retrying.
#[derive(Debug, Error)]
pub enum SolverError {
    /// A pivot fell below `dim * eps * max_diagonal` during a Cholesky
    /// factorization: the Gram submatrix is numerically rank deficient.
    #[error("matrix is not positive definite (pivot {pivot} failed)")]
    NotPositiveDefinite { pivot: usize },

    /// An active set produced a rank-deficient Gram submatrix.
    #[error("degenerate support: active-set Gram matrix is rank deficient")]
    DegenerateSupport,

    /// The cross Gram matrix of a Dantzig-selector state is singular.
    #[error("cross Gram matrix of primal/dual supports is numerically singular")]
    SingularCrossGram,

    /// The homotopy did not terminate within the step budget.
    #[error("homotopy exceeded the iteration limit of {limit} steps")]
    IterationLimit { limit: usize },

    /// A constraint that must be inactive is already violated on entry;
    /// the warm-start state handed in is inconsistent.
    #[error("constraint {index} already violated: |{value}| > {bound} + tol")]
    ConstraintAlreadyViolated {
        index: usize,
        value: f64,
        bound: f64,
    },

    /// A warm-start state failed its optimality check for the old problem.
    #[error("stale warm start: state does not solve the old problem")]
    StaleWarmStart,

    /// The measurement matrix has an identically zero column.
    #[error("matrix column {col} is identically zero")]
    ZeroColumn { col: usize },

    /// No nonsingular square row subset could be found to bootstrap decoding.
    #[error("decoder bootstrap failed: no nonsingular n-row subset found")]
    SingularBootstrap,

    /// An n-by-n row submatrix of the coding stack is singular.
    #[error("square row submatrix of the coding matrix is singular")]
    SingularSubmatrix,

    /// The decoder support bookkeeping lost the `|complement| = n` balance,
    /// which happens when added measurements are exactly consistent with a
    /// degenerate (already recovered) state. Not supported; re-encode instead.
    #[error("decoder support is unbalanced; the instance violates the generic-position assumption")]
    UnbalancedSupport,

    /// A matrix that must have full column rank does not.
    #[error("matrix is rank deficient")]
    RankDeficient,

    /// The projected Gram matrix `P_G' P_G` is singular (support too large or
    /// non-generic coding matrix).
    #[error("projected Gram matrix is singular (support of size {support} exceeds capacity {capacity})")]
    SingularGram { support: usize, capacity: usize },

    /// The step-driven homotopy parameter recursion went backwards and the
    /// endpoint clamp could not recover.
    #[error("homotopy parameter recursion became non-monotone")]
    NonmonotoneEpsilon,

    /// Wavelet transforms require power-of-two lengths.
    #[error("bad signal length {len}: expected a nonzero power of two")]
    BadLength { len: usize },

    /// The brute-force oracle found no candidate passing its certificate.
    #[error("no certified solution found by the enumeration oracle")]
    NoCertifiedSolution,

    /// Matrix/vector dimensions do not line up.
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },

    /// A size cap or argument constraint was violated.
    #[error("invalid argument: {context}")]
    InvalidArgument { context: String },

    /// An experiment configuration field is out of range or inconsistent.
    #[error("bad configuration: {field}: {message}")]
    Config { field: String, message: String },
}

impl SolverError {
    pub(crate) fn dim(context: impl Into<String>) -> Self {
        SolverError::DimensionMismatch {
            context: context.into(),
        }
    }

    pub(crate) fn arg(context: impl Into<String>) -> Self {
        SolverError::InvalidArgument {
            context: context.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, SolverError>;
