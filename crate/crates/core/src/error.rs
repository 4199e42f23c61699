use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degree out of range: {0}")]
    DegreeOutOfRange(String),

    #[error("incompatible operands: {0}")]
    IncompatibleOperands(String),

    #[error("invalid direction: {0}")]
    InvalidDirection(String),

    #[error("metric is not positive definite")]
    NotPositiveDefinite,

    #[error("invalid step: {0}")]
    InvalidStep(String),

    #[error("invalid curvature: {0}")]
    InvalidCurvature(String),

    #[error("vacuous condition: {0}")]
    VacuousCondition(String),

    #[error("wrong regime: {0}")]
    WrongRegime(String),

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),

    #[error("dimension {n} exceeds the configured cap {cap}")]
    DimensionCap { n: usize, cap: usize },

    #[error("unknown identity: {0}")]
    UnknownIdentity(String),
}

pub type Result<T> = std::result::Result<T, Error>;
