use thiserror::Error;

/// Errors raised by the growth-accounting library.
///
/// Every variant maps to a stable machine-readable code via [`BgaError::code`],
/// which is what the CLI and the HTTP service put on the wire.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BgaError {
    #[error("design matrix is singular: logged inputs are collinear")]
    SingularDesign,

    #[error("non-positive level {value} at {location}")]
    NonPositiveLevel { location: String, value: f64 },

    #[error("insufficient observations: need at least {needed}, got {got}")]
    InsufficientObservations { needed: usize, got: usize },

    #[error("input sets do not match: {0}")]
    MismatchedInputs(String),

    #[error("no growth rate for input `{0}`")]
    MissingInputRate(String),

    #[error("rate must be positive, got {0}")]
    NonPositiveRate(f64),

    #[error("target multiple {multiple} is unreachable at rate {rate}")]
    UnreachableTarget { multiple: f64, rate: f64 },

    #[error("follower never catches the leader: follower rate {follower_rate} <= leader rate {leader_rate}")]
    NeverCatches { follower_rate: f64, leader_rate: f64 },

    #[error("horizon must be positive, got {0}")]
    NonPositiveHorizon(f64),

    #[error("function has no sign change on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("root finder did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("infeasible strategy mix: {0}")]
    InfeasibleMix(String),

    #[error("planning horizon exhausted: {0}")]
    HorizonExhausted(String),

    #[error("period mismatch: {0}")]
    PeriodMismatch(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("json error: {0}")]
    Json(String),
}

impl BgaError {
    /// Stable error code used by the CLI and the service.
    pub fn code(&self) -> &'static str {
        match self {
            BgaError::SingularDesign => "SingularDesign",
            BgaError::NonPositiveLevel { .. } => "NonPositiveLevel",
            BgaError::InsufficientObservations { .. } => "InsufficientObservations",
            BgaError::MismatchedInputs(_) => "MismatchedInputs",
            BgaError::MissingInputRate(_) => "MissingInputRate",
            BgaError::NonPositiveRate(_) => "NonPositiveRate",
            BgaError::UnreachableTarget { .. } => "UnreachableTarget",
            BgaError::NeverCatches { .. } => "NeverCatches",
            BgaError::NonPositiveHorizon(_) => "NonPositiveHorizon",
            BgaError::NoSignChange { .. } => "NoSignChange",
            BgaError::NoConvergence { .. } => "NoConvergence",
            BgaError::InfeasibleMix(_) => "InfeasibleMix",
            BgaError::HorizonExhausted(_) => "HorizonExhausted",
            BgaError::PeriodMismatch(_) => "PeriodMismatch",
            BgaError::Parse { .. } => "ParseError",
            BgaError::InvalidArgument(_) => "InvalidArgument",
            BgaError::Json(_) => "JsonError",
        }
    }
}

impl From<serde_json::Error> for BgaError {
    fn from(err: serde_json::Error) -> Self {
        BgaError::Json(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, BgaError>;
