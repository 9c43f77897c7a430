use thiserror::Error;

/// Errors raised by the geometric pipeline.
///
/// Most of these are recoverable at the frame level: the reconstruction
/// loop turns them into a `NotReconstructed` outcome and keeps waiting for a
/// better aim.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),

    #[error("insufficient input: need at least {needed}, got {got}")]
    InsufficientInput { needed: usize, got: usize },

    #[error("fit failed: {0}")]
    FitFailure(String),

    #[error("conic is not an ellipse")]
    NotAnEllipse,

    #[error("no principal direction: no seed turn angle within {alpha_max_deg} deg")]
    NoPrincipalDirection { alpha_max_deg: f64 },

    #[error("ambiguous shape: {0}")]
    AmbiguousShape(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(&'static str),

    #[error("internal inconsistency: {0}")]
    InternalInconsistency(&'static str),

    #[error("contract violation: {0}")]
    ContractViolation(&'static str),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
