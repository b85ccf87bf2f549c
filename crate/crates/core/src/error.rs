//! Error type shared by the solver modules.

use thiserror::Error;

/// Errors surfaced by curve evaluation, Riemann solves and the front
/// tracking engine.
#[derive(Debug, Clone, Error)]
pub enum SolverError {
    /// The flux Jacobian failed the strict-hyperbolicity check at a state
    /// (complex or nearly coinciding eigenvalues).
    #[error("non-hyperbolic state: {0}")]
    NonHyperbolic(String),

    /// A wave curve or a solver iterate left the admissible state box.
    /// The estimates the construction relies on only hold inside the box,
    /// so this is a hard failure rather than a clamp.
    #[error("state left the admissible box: {0}")]
    LeftOmega(String),

    /// An iterative solve (shock curve, Riemann map, boundary map,
    /// q-coordinates) did not reach its residual tolerance.
    #[error("iteration failed to converge: {0}")]
    NoConvergence(String),

    /// The boundary-map determinant condition is violated at the base
    /// state, so the boundary Riemann problem is ill posed.
    #[error("degenerate boundary map: |det| = {0:.3e}")]
    DegenerateBoundary(f64),

    /// A curve is not uniformly non-characteristic for the requested
    /// family index.
    #[error("curve is not non-characteristic: {0}")]
    NotNonCharacteristic(String),

    /// Total variation of the data exceeds the admissible bound.
    #[error("total variation too large: {0}")]
    TVTooLarge(String),

    /// The configuration violates a structural invariant (state chaining,
    /// front ordering).
    #[error("configuration invariant violated: {0}")]
    InvariantViolation(String),

    /// The event-count guard tripped; the interaction threshold is
    /// probably chosen badly for the data.
    #[error("event budget of {0} exceeded")]
    EventBudgetExceeded(u64),

    /// A splitting run left its admissible domain (functional or L1
    /// budget).
    #[error("splitting domain exceeded: {0}")]
    DomainExceeded(String),

    /// Malformed input data (dimension mismatch, unsorted breakpoints...).
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, SolverError>;
