use thiserror::Error;

use crate::ddseq::DslError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(
        "unphysical Bell-diagonal parameters ({c1}, {c2}, {c3}): Bell eigenvalue {min_eigenvalue:.3e} is negative"
    )]
    UnphysicalParams {
        c1: f64,
        c2: f64,
        c3: f64,
        min_eigenvalue: f64,
    },

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("Kraus pair is not trace preserving (deviation {deviation:.3e})")]
    IncompleteKraus { deviation: f64 },

    #[error("no discord transition: |c1(0)| = {c1_abs} does not exceed |c3| = {c3_abs}")]
    NoTransition { c1_abs: f64, c3_abs: f64 },

    #[error("unknown sequence `{0}` (expected one of XY4S, XY8S, XY16S, KDDXY)")]
    UnknownSequence(String),

    #[error(transparent)]
    Dsl(#[from] DslError),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("incomplete measurement record: missing {0}")]
    IncompleteRecord(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {message}")]
    Format { context: String, message: String },
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn format(context: impl Into<String>, message: impl ToString) -> Self {
        Error::Format {
            context: context.into(),
            message: message.to_string(),
        }
    }
}
