use std::path::PathBuf;

use thiserror::Error;

/// A single failed network invariant, named so callers can report it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub invariant: &'static str,
    pub detail: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.invariant, self.detail)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// NaN/Inf in a residual, Jacobian or merit value, or an exponent out of range.
    #[error("numerical breakdown: {context}")]
    NumericalBreakdown { context: String, x: Vec<f64> },

    #[error("unknown problem `{name}` (available: {available})")]
    UnknownProblem { name: String, available: String },

    #[error("unknown solver `{0}` (available: lmls, lmtr, lm-yf, lm-fy, levmar)")]
    UnknownSolver(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{file}:{line}:{column}: {message}")]
    Parse {
        file: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },

    #[error("network validation failed: {}", join_violations(.0))]
    Validation(Vec<Violation>),

    #[error("{0}")]
    Csv(#[from] csv::Error),

    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

impl Error {
    /// I/O failure on `path`.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn breakdown(context: impl Into<String>, x: &[f64]) -> Self {
        Error::NumericalBreakdown {
            context: context.into(),
            x: x.to_vec(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
