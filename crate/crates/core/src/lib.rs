//! ADER-DG one-step integrator for systems of ordinary differential equations.
//!
//! A local continuous-Galerkin predictor on each time element feeds a Gauss
//! quadrature corrector. Everything is generic over [`Scalar`].

// `!(a > b)` is used on purpose so NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod error;
pub mod integrator;
pub mod linalg;
pub mod ode;
pub mod predictor;
pub mod problems;
pub mod scalar;
pub mod stability;
pub mod tables;

pub use analysis::{ConvergenceReport, ErrorNorms, StudyOptions};
pub use error::{Error, Result};
pub use integrator::{IntegratorOptions, TimeMesh, Trajectory};
pub use linalg::DenseMatrix;
pub use ode::OdeProblem;
pub use predictor::{ElementCoefficients, SolveStats, SolverKind, SolverOptions};
pub use scalar::Scalar;
pub use tables::SchemeTables;
