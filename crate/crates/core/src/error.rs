use thiserror::Error;

use crate::linalg::LinalgError;
use crate::predictor::{SolveStats, SolverKind};

/// Errors produced by the solver, the analysis harness and the problem registry.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),

    /// The predictor iteration did not reach its tolerance. Carries the
    /// statistics gathered so far so callers can fall back to another solver.
    #[error("{method} predictor diverged on element {element} [{t_left}, {t_right}] after {} iterations (residual {})", stats.iterations, stats.residual_norm)]
    Divergence {
        method: SolverKind,
        element: usize,
        t_left: f64,
        t_right: f64,
        stats: SolveStats,
    },

    #[error("right-hand side returned a non-finite value at predictor node {node} (t = {t})")]
    Evaluation { node: usize, t: f64 },

    #[error("non-finite node value after element {element} (t = {t})")]
    NonFiniteNode { element: usize, t: f64 },

    #[error("t = {t} lies outside the solution domain [{t0}, {t1}]")]
    OutOfRange { t: f64, t0: f64, t1: f64 },

    #[error("stability function has a pole at z = {re}{im:+}i")]
    Pole { re: f64, im: f64 },

    #[error("unknown problem '{0}'")]
    UnknownProblem(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("problem '{0}' has no exact solution")]
    MissingExact(String),

    #[error("order fit needs at least two distinct step sizes")]
    DegenerateFit,

    #[error(
        "only {usable} rows have {norm} error above the noise floor {floor:e}; need at least 2"
    )]
    InsufficientData {
        norm: &'static str,
        usable: usize,
        floor: f64,
    },

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
