use thiserror::Error;

use crate::solver::SolveStatus;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum TvError {
    #[error("moment degree too low: need {needed}, have {available}")]
    DegreeTooLow { needed: usize, available: usize },

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("unsupported dimension {dim} for {what}")]
    UnsupportedDimension { what: &'static str, dim: usize },

    #[error("empty sample")]
    EmptySample,

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("quadrature did not reach tolerance {tol:e} (estimate {estimate}, error {error:e})")]
    QuadratureNonConvergent { tol: f64, estimate: f64, error: f64 },

    #[error("solver failed at level {level}: {status}")]
    SolverFailure {
        level: usize,
        status: SolveStatus,
        /// Objective of the last iterate; not a valid bound.
        last_objective: Option<f64>,
    },

    #[error("certificate mismatch: {0}")]
    CertificateMismatch(String),

    #[error("moment matrix is not flat (ranks {ranks:?})")]
    NotFlat { ranks: Vec<usize> },

    #[error("ill-conditioned extraction: residual {residual:e}")]
    IllConditioned { residual: f64 },

    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T, E = TvError> = std::result::Result<T, E>;
