use thiserror::Error;

use crate::wellposed::Certificate;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Kernel and moduli (or card fields) do not describe one consistent material.
    #[error("configuration error: {0}")]
    Config(String),

    /// A weighted kernel integral is infinite.
    #[error("divergent integral: {0}")]
    Divergence(String),

    #[error("expected a {expected} evolution, found {found}")]
    KindMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("weight is not admissible: {0}")]
    InvalidWeight(String),

    #[error("invalid relaxation measure: {0}")]
    InvalidMeasure(String),

    /// Fixed-point iteration refused because the operator is not a contraction.
    #[error("not contractive (gamma = {gamma})", gamma = .0.gamma)]
    NotContractive(Box<Certificate>),

    #[error("no convergence after {iterations} iterations (last update {last:e})", last = residuals.last().copied().unwrap_or(f64::NAN))]
    NonConvergence {
        iterations: usize,
        residuals: Vec<f64>,
    },

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
