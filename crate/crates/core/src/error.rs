use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("occupation {occupation} of mode {mode} exceeds cutoff {cutoff}")]
    CutoffViolation {
        mode: usize,
        occupation: usize,
        cutoff: usize,
    },

    #[error("truncation risk: {0}")]
    TruncationRisk(String),

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("expectation value undefined for a zero-weight state")]
    UndefinedExpectation,

    #[error("mode {mode} out of range for {mode_count} modes")]
    ModeOutOfRange { mode: usize, mode_count: usize },

    #[error("states live on different mode sets")]
    ModeSetMismatch,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("impossible event: probability {probability:e} below threshold")]
    ImpossibleEvent { probability: f64 },

    #[error("ill-posed data: {0}")]
    IllPosedData(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Short stable identifier, used by front ends for machine-readable diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::CutoffViolation { .. } => "cutoff-violation",
            Error::TruncationRisk(_) => "truncation-risk",
            Error::ZeroNorm => "zero-norm",
            Error::UndefinedExpectation => "undefined-expectation",
            Error::ModeOutOfRange { .. } => "mode-out-of-range",
            Error::ModeSetMismatch => "mode-set-mismatch",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::ImpossibleEvent { .. } => "impossible-event",
            Error::IllPosedData(_) => "ill-posed-data",
            Error::Parse { .. } => "parse",
        }
    }
}
