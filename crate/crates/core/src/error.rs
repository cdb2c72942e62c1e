//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by construction, evaluation, and simulation routines.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// The mean drift condition `d + lambda E J < 0` fails, i.e.
    /// `phi'(0) <= 0`. The library only supports the positive-recurrent
    /// regime.
    #[error("mean drift condition violated: d + lambda*EJ = {mean_drift} >= 0")]
    MeanDriftViolation { mean_drift: f64 },

    /// A positive jump rate was given without a jump distribution.
    #[error("jump_rate > 0 requires a jump_dist")]
    MissingJumpDist,

    /// A distribution or holding-function parameter is out of range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Evaluation requested outside the function's domain.
    #[error("domain error: {0}")]
    DomainError(String),

    /// An iterative solver exhausted its iteration budget.
    #[error("convergence failure in {context}: {detail}")]
    ConvergenceFailure { context: String, detail: String },

    /// Series reversion requires a positive leading coefficient.
    #[error("series not invertible: leading coefficient {a1} <= 0")]
    NonInvertible { a1: f64 },

    /// Adaptive quadrature exceeded its refinement budget.
    #[error("quadrature failed on [{a}, {b}]: error estimate {err:e} above tolerance after {panels} panels")]
    QuadratureFailure { a: f64, b: f64, err: f64, panels: usize },

    /// Two-level transform called with x > y.
    #[error("order violation: x = {x} must not exceed y = {y}")]
    OrderViolation { x: f64, y: f64 },

    /// Finite-dimensional transform called with non-increasing levels.
    #[error("levels must be strictly increasing")]
    LevelsNotIncreasing,

    /// Correlation of a holding function that vanishes a.e. on [0, x].
    #[error("degenerate holding function: zero L2 norm on [0, {x}]")]
    DegenerateFunction { x: f64 },

    /// Event cap hit while simulating a single excursion.
    #[error("excursion exceeded {max_events} events before first passage")]
    HorizonExceeded { max_events: u64 },

    /// Fewer regenerative cycles completed than required.
    #[error("horizon too short: only {cycles} complete cycles, need {required}")]
    HorizonTooShort { cycles: u64, required: u64 },

    /// Multi-class proportions do not sum to one (or are negative).
    #[error("bad proportions: {0}")]
    BadProportions(String),

    /// Break-even penalty requested while the order-size problem is unbounded.
    #[error("no finite optimal order size exists for this cost model")]
    UnboundedUpstream,

    /// Numeric convexity pre-check failed for a fixed-proportions problem.
    #[error("aggregate holding integral failed the convexity check near x = {at}")]
    ConvexityCheckFailed { at: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
