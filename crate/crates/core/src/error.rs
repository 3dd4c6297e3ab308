use std::path::PathBuf;

use crate::solver::{BalancedModel, ConvergenceReport};

/// Errors raised anywhere in the laboratory.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("tail quadrature did not converge after {segments} widening segments (side: {side})")]
    NonConvergentTail { segments: usize, side: &'static str },

    #[error("bracket [{lo}, {hi}] does not straddle a root: g(lo) = {g_lo}, g(hi) = {g_hi}")]
    BracketInvalid { lo: f64, hi: f64, g_lo: f64, g_hi: f64 },

    #[error("iterate became non-finite at coefficient {index}")]
    DivergentIterate { index: usize },

    #[error("no convergence after {} iterations (last sup delta {:.3e})", .report.iterations, .report.final_sup_delta)]
    MaxIterExceeded {
        model: Box<BalancedModel>,
        report: ConvergenceReport,
    },

    #[error("integrand at x_max is {ratio:.3e} of its peak; the model does not reach far enough")]
    TailNotConverged { ratio: f64 },

    #[error("model file has format version {found}, expected {expected}")]
    FormatVersionMismatch { found: u32, expected: u32 },

    #[error("corrupt model file: {0}")]
    CorruptFile(String),

    #[error("{mass:.3e} of the weight sits beyond coefficient {limit}")]
    TruncationDominates { mass: f64, limit: usize },

    #[error("x-grid too narrow: {0}")]
    GridTooNarrow(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
