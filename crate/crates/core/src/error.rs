use thiserror::Error;

/// Errors produced by geometry construction and evaluation.
#[derive(Debug, Error)]
pub enum CoreError {
    /// Invalid construction parameters (nonpositive radius, bad dimension,
    /// violated embedding constraint, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// A point is outside the domain where an operation is defined
    /// (off-manifold beyond tolerance, outside the retraction's injectivity
    /// neighborhood, no chart covers it).
    #[error("domain error: {0}")]
    Domain(String),

    /// Numerical breakdown: step underflow, non-SPD metric, singular solve.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Derivative order outside the supported range.
    #[error("unsupported derivative order {0} (supported: 1..=4)")]
    UnsupportedOrder(usize),

    /// Mismatched dimensions between operands.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
