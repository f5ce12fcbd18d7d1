use thiserror::Error;

/// Failures raised by the geometric pipelines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    /// Finite-difference step sizes or other run parameters are unusable.
    #[error("configuration error: {0}")]
    Config(String),

    /// A point or vector violates the constraints of its model.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate frame: pivot {index} has norm {norm:.3e}")]
    DegenerateFrame { index: usize, norm: f64 },

    /// A numerically computed quantity failed an internal consistency check.
    #[error("consistency error: {0}")]
    Consistency(String),

    /// The hypotheses of an identity were not met at the evaluation point.
    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("unsupported codimension {0}: no unit normal available")]
    UnsupportedCodimension(usize),

    /// The requested configuration is valid but outside what the numerics support.
    #[error("capability error: {0}")]
    Capability(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;
