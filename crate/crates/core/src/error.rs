use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("origin and destination coincide at node {0}")]
    SelfTrip(usize),
    #[error("node {node} out of range (node count {count})")]
    NodeOutOfRange { node: usize, count: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("negative value {value} at index {index}")]
    Negative { index: usize, value: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("O-D pair ({0}, {1}) is unreachable")]
    Unreachable(usize, usize),
    #[error("population not calibrated: group {0} has no outside option")]
    Uncalibrated(usize),
    #[error("lp infeasible: {0}")]
    Infeasible(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io { path: path.as_ref().display().to_string(), source }
    }
}
