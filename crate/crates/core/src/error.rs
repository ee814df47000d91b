use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid integrated survival function: {0}")]
    InvalidPi(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("set is not bounded above: {0}")]
    Unbounded(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("solver did not converge (status {status}, objective {objective}, residual {residual:e})")]
    SolverNotConverged {
        status: String,
        objective: f64,
        residual: f64,
        action: Vec<f64>,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Infeasible(_) => 2,
            Error::Numeric(_) | Error::SolverNotConverged { .. } | Error::Unbounded(_) => 3,
            Error::Io(_) | Error::Json(_) | Error::Csv(_) => 4,
            _ => 1,
        }
    }
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidDistribution(msg.into())
}
