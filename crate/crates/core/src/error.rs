use thiserror::Error;

/// Errors raised by the library. The CLI maps these onto exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A sub-pair with weight (or beta) numerically equal to zero was met.
    /// Every sign dichotomy downstream assumes this never happens.
    #[error("degenerate context: sub-pair {small:?} <= {big:?} has zero weight ({value:e})")]
    Degenerate {
        small: Vec<u32>,
        big: Vec<u32>,
        value: f64,
    },

    #[error("irrationality violation: qr pair {small:?} <= {big:?} has beta = {value:e}")]
    Irrationality {
        small: Vec<u32>,
        big: Vec<u32>,
        value: f64,
    },

    #[error("internal consistency: {0}")]
    Internal(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// A claim's hypothesis does not hold for the given input (e.g. the
    /// system is not weakly separative).
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("too large: {0}")]
    TooLarge(String),

    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(line: usize, column: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: msg.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
