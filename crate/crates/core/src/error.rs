use thiserror::Error;

/// Errors raised by the factorization library.
///
/// An infinite divergence is a value, not an error; see [`crate::ExtendedReal`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("value {value} is outside the domain (must be finite and nonnegative)")]
    Domain { value: f64 },

    #[error("entry ({row}, {col}) = {value} is not a finite nonnegative real")]
    InvalidEntry { row: usize, col: usize, value: f64 },

    #[error("matrix must have at least one row and one column, got {rows}x{cols}")]
    EmptyMatrix { rows: usize, cols: usize },

    #[error("expected {expected} entries for the given shape, got {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("tensor shape mismatch: expected {expected:?}, found {found:?}")]
    TensorShapeMismatch {
        expected: (usize, usize, usize),
        found: (usize, usize, usize),
    },

    #[error("entries sum to {sum}, expected 1 within {tol}")]
    NotProbability { sum: f64, tol: f64 },

    #[error("row {row} sums to {sum}, expected 1 within {tol}")]
    NotRowStochastic { row: usize, sum: f64, tol: f64 },

    #[error("inner size {k} is invalid for a {rows}x{cols} problem (need 1 <= k <= min(rows, cols))")]
    InvalidInnerSize { k: usize, rows: usize, cols: usize },

    #[error("input matrix has no positive entry")]
    DegenerateInput,

    #[error("scale factor {0} must be finite and positive")]
    InvalidTotal(f64),

    #[error("model entry ({row}, {col}) vanished where the data is positive")]
    Underflow { row: usize, col: usize },

    #[error("gradient undefined: model entry ({row}, {col}) is zero where the data is positive")]
    GradientUndefined { row: usize, col: usize },

    #[error("tensor is not a product of factors (max residual {residual})")]
    NotProductTensor { residual: f64 },

    #[error("tensor marginal deviates from the target by {deviation}")]
    NotInMarginalSet { deviation: f64 },

    #[error("finite-difference step {0} outside [1e-8, 1e-4]")]
    InvalidStep(f64),

    #[error("objective is infinite at a perturbed point")]
    OracleFailure,

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
