use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A configuration field failed validation. `path` is the dotted field path.
    #[error("{path}: {message}")]
    Config { path: String, message: String },

    #[error(
        "saturation violated in column {column} (code {code}): dwell {dwell_s:e} s exceeds pw_max {pw_max_s:e} s"
    )]
    SaturationViolation {
        column: usize,
        code: u32,
        dwell_s: f64,
        pw_max_s: f64,
    },

    #[error("{0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit status for this error: 1 for validation problems, 2 for
    /// failures raised while simulating or writing output.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) | Error::Config { .. } | Error::Parse(_) => 1,
            Error::SaturationViolation { .. } | Error::Io(_) => 2,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
