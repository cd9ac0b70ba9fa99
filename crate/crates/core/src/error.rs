use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("pole at expansion point: offset {offset:e} with exponent {exponent}")]
    Pole { offset: f64, exponent: i32 },

    #[error("series order mismatch: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },

    #[error("series order {order} exceeds cap {cap}")]
    OrderCap { order: usize, cap: usize },

    #[error("invalid weight scheme: {0}")]
    InvalidScheme(String),

    #[error("atom configuration has tied atoms {a} and {b}; normalize it first")]
    TiedAtoms { a: f64, b: f64 },

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("ill-conditioned kernel evaluation: value {value} outside [0, 1] band")]
    Conditioning { value: f64 },

    #[error("function supplies {got} Taylor coefficients, {needed} required")]
    InsufficientOrder { needed: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point {re}{im:+}i is within {distance:e} of the support")]
    Domain { re: f64, im: f64, distance: f64 },

    #[error("quadrature did not converge: estimate {estimate}, error estimate {error:e}")]
    Accuracy { estimate: f64, error: f64 },

    #[error("budget too small: {0}")]
    Budget(String),

    #[error("{0}")]
    Hypothesis(String),

    #[error("undefined expression: {0}")]
    Undefined(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
