use thiserror::Error;

use crate::metric::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input: wrong shapes, non-finite or negative entries.
    #[error("structural error: {0}")]
    Structural(String),

    /// An argument outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The space failed metric validation.
    #[error("invalid space: {} violation(s), first: {}", .0.violation_count(), .0.first_message())]
    Invalid(Box<ValidationReport>),

    #[error("packing cap exceeded: reduced conflict graph component has {kernel} points (cap {cap})")]
    CapExceeded { kernel: usize, cap: usize },

    #[error("packing cap exceeded at center {center}, radius {radius}: kernel {kernel} > cap {cap}")]
    ScaleCapExceeded {
        center: usize,
        radius: f64,
        kernel: usize,
        cap: usize,
    },

    #[error("size cap exceeded: {what} has {size} elements (cap {cap})")]
    SizeCap {
        what: &'static str,
        size: usize,
        cap: usize,
    },

    #[error("rho2 is not flagged as an ultrametric")]
    NotUltrametric,

    #[error("operation requires rho1 == rho2")]
    NotSingleMetric,

    /// An error raised while processing one row of a sweep.
    #[error("at alpha = {alpha}: {source}")]
    AtAlpha { alpha: f64, source: Box<Error> },

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by malformed input rather than a failed property.
    pub fn is_structural(&self) -> bool {
        if let Error::AtAlpha { source, .. } = self {
            return source.is_structural();
        }
        matches!(
            self,
            Error::Structural(_)
                | Error::Domain(_)
                | Error::Invalid(_)
                | Error::Io(_)
                | Error::Json(_)
                | Error::Csv(_)
                | Error::SizeCap { .. }
                | Error::NotUltrametric
                | Error::NotSingleMetric
        )
    }
}
