use thiserror::Error;

/// Error type shared by every module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("KL divergence undefined: q[{index}] = 0 but p[{index}] = {p} > 0")]
    DivergenceUndefined { index: usize, p: f64 },

    #[error("{context}: entry [{index}] = {value} violates {requirement}")]
    DomainError {
        context: &'static str,
        index: usize,
        value: f64,
        requirement: &'static str,
    },

    #[error("vector does not lie on the simplex: sum = {sum}, allowed deviation {tolerance}")]
    NotNormalized { sum: f64, tolerance: f64 },

    #[error("marginals are unbalanced: |sum(r) - sum(c)| = {gap} exceeds {tolerance}")]
    UnbalancedMarginals { gap: f64, tolerance: f64 },

    #[error("invalid parameter {name} = {value}: {requirement}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },

    #[error("degenerate input in {context}: {detail}")]
    DegenerateInput {
        context: &'static str,
        detail: String,
    },

    #[error("numeric overflow in {context}; retry with a larger epsilon or a coarser tolerance")]
    NumericOverflow { context: &'static str },

    #[error("iteration cap {cap} exceeded in {context}; this indicates an internal defect")]
    IterationCap { cap: u64, context: &'static str },

    #[error("internal invariant violated: {0}")]
    InternalInvariant(String),

    #[error("problem size n = {n} exceeds the supported maximum {max} for {context}")]
    CapabilityExceeded {
        n: usize,
        max: usize,
        context: &'static str,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures caused by the caller's input (files, shapes, parameters)
    /// rather than by numerics going wrong mid-solve.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::DivergenceUndefined { .. }
                | Error::DomainError { .. }
                | Error::NotNormalized { .. }
                | Error::UnbalancedMarginals { .. }
                | Error::InvalidParameter { .. }
                | Error::CapabilityExceeded { .. }
                | Error::Format(_)
                | Error::Io(_)
        )
    }
}
