use std::path::PathBuf;

use crate::maxwellian::JuttnerParams;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument outside the domain of a function (β ≤ 0, ẽ ≤ 1, bad order).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("convergence failure: {0}")]
    Convergence(String),

    /// A distribution that cannot be decomposed into macroscopic fields.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// The discrete Newton closure failed; `fallback` holds the continuum-formula
    /// parameters, which are still usable.
    #[error("matched closure did not converge after {iterations} iterations (residual {residual:.3e})")]
    MatchedClosure {
        iterations: usize,
        residual: f64,
        fallback: JuttnerParams,
    },

    #[error("outside the near-equilibrium regime: {0}")]
    Regime(String),

    #[error("cell {cell}: {source}")]
    Cell {
        cell: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("cannot parse {}: {message} (line {line}, column {column})", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn in_cell(self, cell: usize) -> Self {
        Error::Cell {
            cell,
            source: Box::new(self),
        }
    }

    /// True for errors caused by user input (configuration or parse errors).
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Config { .. } | Error::Parse { .. })
    }
}
