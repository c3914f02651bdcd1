use thiserror::Error;

/// Errors produced by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch: expected {expected} interior values, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    /// The fibering function kept one sign on the whole search interval.
    #[error("root not bracketed in [{lo:e}, {hi:e}] (pathological field?)")]
    NumericalRange { lo: f64, hi: f64 },

    #[error("estimation of {what} did not converge after {restarts} restarts (best so far {best:e})")]
    Estimation {
        what: String,
        restarts: usize,
        best: f64,
    },

    #[error("optimization failed: {0}")]
    Optimization(String),

    /// Nonlinear solve inside an implicit step or a stationary refinement failed.
    #[error("newton iteration did not converge: {0}")]
    Newton(String),

    #[error("{}", match line {
        Some(l) => format!("config error at line {l}: {msg}"),
        None => format!("config error: {msg}"),
    })]
    Config { line: Option<usize>, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(line: impl Into<Option<usize>>, msg: impl Into<String>) -> Self {
        Error::Config {
            line: line.into(),
            msg: msg.into(),
        }
    }
}
