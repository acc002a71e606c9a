use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate frame: vector {index} has g-norm {norm:e}")]
    DegenerateFrame { index: usize, norm: f64 },

    #[error("point outside chart domain: {0}")]
    ChartDomain(String),

    #[error("velocity is not g-unit: g(v,v) - 1 = {0:e}")]
    NotUnitVelocity(f64),

    #[error("frame base point does not match the curvature base point")]
    FrameMismatch,

    #[error("noise intensity is negative: {0:e}")]
    NegativeXi(f64),

    #[error("covariance is not positive semi-definite: eigenvalue {eigenvalue:e} below -{clamp:e}")]
    Psd { eigenvalue: f64, clamp: f64 },

    #[error("path left the chart at s = {s}")]
    ChartExit { s: f64 },

    #[error("insufficient samples: {got} increments, at least {need} required")]
    InsufficientSamples { got: usize, need: usize },

    #[error("{0}")]
    Invalid(String),
}

impl Error {
    /// Stable machine-readable name, used in CLI error documents.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::DegenerateFrame { .. } => "DegenerateFrame",
            Error::ChartDomain(_) => "ChartDomain",
            Error::NotUnitVelocity(_) => "NotUnitVelocity",
            Error::FrameMismatch => "FrameMismatch",
            Error::NegativeXi(_) => "NegativeXi",
            Error::Psd { .. } => "PSDError",
            Error::ChartExit { .. } => "ChartExit",
            Error::InsufficientSamples { .. } => "InsufficientSamples",
            Error::Invalid(_) => "Invalid",
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
