use num_complex::Complex64;
use thiserror::Error;

use crate::funcs::HypothesisReport;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure mode of the library. Each variant carries a stable
/// machine-readable code (see [`Error::code`]) used by the CLI.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("domain error at {point}: {reason}")]
    Domain { point: Complex64, reason: String },

    #[error("overflow while evaluating at {point}")]
    Overflow { point: Complex64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("hypothesis {which} violated: {summary}")]
    Hypothesis {
        which: String,
        summary: String,
        report: Box<HypothesisReport>,
    },

    #[error("point {point} lies within {distance:e} of a singularity")]
    NearSingularity { point: Complex64, distance: f64 },

    #[error("{what} did not reach tolerance (achieved {achieved:e})")]
    Convergence { what: String, achieved: f64 },

    #[error("Laplace integral diverges: growth rate {rate} >= {n}")]
    Growth { rate: f64, n: f64 },

    #[error("series variable mismatch: {left} vs {right}")]
    TagMismatch { left: String, right: String },

    #[error("Borel transform needs a vanishing constant term (found {0})")]
    ConstantTerm(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Syntax { .. } => "E_SYNTAX",
            Error::UnknownIdentifier { .. } => "E_IDENT",
            Error::Domain { .. } => "E_DOMAIN",
            Error::Overflow { .. } => "E_OVERFLOW",
            Error::Unsupported(_) => "E_UNSUPPORTED",
            Error::Hypothesis { .. } => "E_HYPOTHESIS",
            Error::NearSingularity { .. } => "E_NEAR_SINGULARITY",
            Error::Convergence { .. } => "E_CONVERGENCE",
            Error::Growth { .. } => "E_GROWTH",
            Error::TagMismatch { .. } => "E_TAG",
            Error::ConstantTerm(_) => "E_CONSTANT_TERM",
            Error::InvalidArgument(_) => "E_ARGUMENT",
        }
    }

    /// True for failures of a checked analytic hypothesis (CLI exit status 2).
    pub fn is_hypothesis(&self) -> bool {
        matches!(self, Error::Hypothesis { .. })
    }

    pub(crate) fn domain(point: Complex64, reason: impl Into<String>) -> Self {
        Error::Domain {
            point,
            reason: reason.into(),
        }
    }

    pub(crate) fn convergence(what: impl Into<String>, achieved: f64) -> Self {
        Error::Convergence {
            what: what.into(),
            achieved,
        }
    }
}
