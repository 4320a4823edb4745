use thiserror::Error;

/// Errors raised by the pacing toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Transfer-function evaluation hit a pole (denominator magnitude below
    /// machine-epsilon scale) at the given frequency.
    #[error("singular evaluation at {freq_hz} Hz")]
    SingularSample { freq_hz: f64 },

    /// Feedback interconnection with an identically-zero return difference.
    #[error("degenerate feedback loop: 1 + L(s) is identically zero")]
    DegenerateLoop,

    /// A discretization was requested for an improper transfer function
    /// (numerator degree exceeds denominator degree).
    #[error("improper transfer function: numerator degree {num} > denominator degree {den}")]
    ImproperTransferFunction { num: usize, den: usize },

    /// A filter or controller was fed a non-finite sample.
    #[error("non-finite input sample: {0}")]
    NonFiniteInput(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
