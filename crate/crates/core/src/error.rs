use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
///
/// Variant names double as stable identifiers: [`Error::kind`] returns the
/// name so that front-ends can print it verbatim.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("not in the exponential regime (s = {s:e})")]
    NotExponential { s: f64 },

    #[error("value overflowed the representable range at t = {t}")]
    Overflow { t: f64 },

    #[error("trajectory grid is not symmetric about t = 0")]
    AsymmetricDomain,

    #[error("invalid step h = {h} for horizon T = {horizon}")]
    InvalidStep { h: f64, horizon: f64 },

    #[error("t = {t} lies outside the tabulated range [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("series carries no information (all values are zero)")]
    DegenerateSeries,

    #[error("normal equations became singular after {iterations} iterations (damping {damping:e})")]
    SingularNormalEquations { iterations: usize, damping: f64 },

    #[error("need at least 2 aligned time points, got {got}")]
    TooFewAlignedPoints { got: usize },

    #[error("x has zero variance, slope is undefined")]
    ZeroVariance,

    #[error("series is empty")]
    EmptySeries,

    #[error("parameter grid is empty")]
    EmptyGrid,

    #[error("expected header `t,value`, found `{found}`")]
    MalformedHeader { found: String },

    #[error("line {line}: {reason}")]
    NonNumericField { line: usize, reason: String },

    #[error("line {line}: time does not increase strictly")]
    NonMonotonicTime { line: usize },

    #[error("no records after the header")]
    EmptyBody,

    #[error("missing field `{path}`")]
    MissingField { path: String },

    #[error("unknown field `{path}`")]
    UnknownField { path: String },

    #[error("field `{path}`: {reason}")]
    TypeMismatch { path: String, reason: String },

    #[error("document syntax: {0}")]
    Syntax(String),
}

impl Error {
    /// The variant name, e.g. `"TooFewPoints"`.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParams(_) => "InvalidParams",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::NotExponential { .. } => "NotExponential",
            Error::Overflow { .. } => "Overflow",
            Error::AsymmetricDomain => "AsymmetricDomain",
            Error::InvalidStep { .. } => "InvalidStep",
            Error::OutOfRange { .. } => "OutOfRange",
            Error::TooFewPoints { .. } => "TooFewPoints",
            Error::DegenerateSeries => "DegenerateSeries",
            Error::SingularNormalEquations { .. } => "SingularNormalEquations",
            Error::TooFewAlignedPoints { .. } => "TooFewAlignedPoints",
            Error::ZeroVariance => "ZeroVariance",
            Error::EmptySeries => "EmptySeries",
            Error::EmptyGrid => "EmptyGrid",
            Error::MalformedHeader { .. } => "MalformedHeader",
            Error::NonNumericField { .. } => "NonNumericField",
            Error::NonMonotonicTime { .. } => "NonMonotonicTime",
            Error::EmptyBody => "EmptyBody",
            Error::MissingField { .. } => "MissingField",
            Error::UnknownField { .. } => "UnknownField",
            Error::TypeMismatch { .. } => "TypeMismatch",
            Error::Syntax(_) => "Syntax",
        }
    }
}
