use std::fmt;

/// Library-wide error type.
#[derive(Debug)]
pub enum Error {
    /// Array dimensions do not line up (wrong channel count, length, ...).
    Shape(String),
    /// A configuration is internally inconsistent or out of its valid domain.
    Config(String),
    /// Non-finite values or otherwise broken arithmetic, naming the culprit.
    Numeric(String),
    /// An operation was called out of order (e.g. backward without forward).
    State(String),
    /// Malformed input data (CSV gaps, bad cells, missing columns).
    Ingest(String),
    /// Corrupt or incompatible serialized artifacts (checkpoints, reports).
    Format(String),
    Io(std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape(msg) => write!(f, "shape error: {msg}"),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Numeric(msg) => write!(f, "numeric error: {msg}"),
            Error::State(msg) => write!(f, "state error: {msg}"),
            Error::Ingest(msg) => write!(f, "ingestion error: {msg}"),
            Error::Format(msg) => write!(f, "format error: {msg}"),
            Error::Io(err) => write!(f, "io error: {err}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err)
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Ingest(err.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Format(err.to_string())
    }
}
