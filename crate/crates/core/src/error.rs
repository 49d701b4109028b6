use std::path::PathBuf;

use thiserror::Error;

/// Failures of the numerical kernels (quadrature, root bracketing, ...).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericalError {
    #[error("quadrature did not converge: estimate {estimate:e}, error {error:e} after {intervals} intervals")]
    QuadratureNotConverged {
        estimate: f64,
        error: f64,
        intervals: usize,
    },
    #[error("non-finite value {value} in {context}")]
    NonFinite { context: &'static str, value: f64 },
    #[error("optimum not enclosed by [{lo}, {hi}] (search ended at {at})")]
    NotBracketed { lo: f64, hi: f64, at: f64 },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Numerical(#[from] NumericalError),
    #[error("invalid degree distribution: {0}")]
    InvalidEnsemble(String),
    #[error("threshold bracket [{lo}, {hi}] is invalid: {detail}")]
    Bracket { lo: f64, hi: f64, detail: String },
    #[error("code construction failed: {0}")]
    Construction(String),
    #[error("alist line {line}: {msg}")]
    Alist { line: usize, msg: String },
    #[error("design infeasible: {0}")]
    Infeasible(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
