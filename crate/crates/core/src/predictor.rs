//! Local DG predictor on a single element.
//!
//! Unknowns are the nodal coefficients `q_p` (one `K`-vector per node). They
//! satisfy `q_p - dt * sum_q B_pq F(q_q, t_left + dt tau_q) = u_n` for all `p`,
//! solved either by fixed-point (Picard) sweeps or by Newton's method on the
//! stacked `(N+1) K` system.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{lu_solve, DenseMatrix};
use crate::ode::OdeProblem;
use crate::scalar::Scalar;
use crate::tables::SchemeTables;

/// Residual growth (relative to the first sweep) at which Picard gives up early.
const PICARD_BLOWUP: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Picard,
    Newton,
    /// Picard first, Newton on any element where Picard diverges.
    #[default]
    Auto,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::Picard => "picard",
            SolverKind::Newton => "newton",
            SolverKind::Auto => "auto",
        })
    }
}

impl FromStr for SolverKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "picard" => Ok(SolverKind::Picard),
            "newton" => Ok(SolverKind::Newton),
            "auto" => Ok(SolverKind::Auto),
            other => Err(Error::Invalid(format!(
                "unknown solver '{other}' (expected picard, newton or auto)"
            ))),
        }
    }
}

/// Iteration counters for one or more predictor solves.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual_norm: f64,
    pub rhs_evals: usize,
    pub jac_evals: usize,
    pub converged: bool,
}

impl SolveStats {
    /// Folds another solve into a running total. Residual is the worst seen.
    pub fn accumulate(&mut self, other: &SolveStats) {
        self.iterations += other.iterations;
        self.rhs_evals += other.rhs_evals;
        self.jac_evals += other.jac_evals;
        self.residual_norm = self.residual_norm.max(other.residual_norm);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions<S: Scalar> {
    /// Absolute tolerance, applied as `tol * max(1, |u_n|_max)`.
    pub tol: S,
    pub picard_max_iter: usize,
    pub newton_max_iter: usize,
    /// Use forward differences when the problem has no analytic Jacobian.
    pub fd_jacobian: bool,
}

impl<S: Scalar> Default for SolverOptions<S> {
    fn default() -> Self {
        Self {
            tol: default_tol::<S>(),
            picard_max_iter: 100,
            newton_max_iter: 50,
            fd_jacobian: true,
        }
    }
}

/// `1e-13` in binary64, scaled by machine epsilon for other scalar types.
pub fn default_tol<S: Scalar>() -> S {
    let scaled = S::of(1e-13) * (S::eps() / S::of(f64::EPSILON));
    scaled.max(S::of(64.0) * S::eps())
}

/// Nodal coefficients of the local solution on one element.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementCoefficients<S: Scalar> {
    /// Row `p` is the coefficient vector at node `tau_p`.
    pub coeffs: DenseMatrix<S>,
    pub element_index: usize,
    pub t_left: S,
    pub dt: S,
    /// `F(q_p, t_p)` for the returned coefficients, when the solver kept them.
    pub rhs_cache: Option<DenseMatrix<S>>,
}

impl<S: Scalar> ElementCoefficients<S> {
    pub fn degree(&self) -> usize {
        self.coeffs.rows() - 1
    }

    pub fn t_right(&self) -> S {
        self.t_left + self.dt
    }

    /// Local solution at local coordinate `tau`.
    pub fn eval(&self, tables: &SchemeTables<S>, tau: S) -> Vec<S> {
        let phi = tables.basis_eval_all(tau);
        let k = self.coeffs.cols();
        let mut out = vec![S::zero(); k];
        for (p, &ph) in phi.iter().enumerate() {
            for (o, &c) in out.iter_mut().zip(self.coeffs.row(p)) {
                *o = *o + ph * c;
            }
        }
        out
    }
}

/// Constant guess `q_p = u_n`, shape `(N+1) x K`.
pub fn initial_guess<S: Scalar>(u_n: &[S], degree: usize) -> DenseMatrix<S> {
    DenseMatrix::from_fn(degree + 1, u_n.len(), |_, k| u_n[k])
}

fn node_times<S: Scalar>(tables: &SchemeTables<S>, t_left: S, dt: S) -> Vec<S> {
    tables
        .nodes()
        .iter()
        .map(|&tau| t_left + dt * tau)
        .collect()
}

/// Evaluates `F` at every node row of `q` into `f`. Returns the first node
/// with a non-finite value, if any.
fn eval_nodes<S: Scalar>(
    problem: &OdeProblem<S>,
    times: &[S],
    q: &DenseMatrix<S>,
    f: &mut DenseMatrix<S>,
) -> Option<usize> {
    let mut bad = None;
    for (p, &t) in times.iter().enumerate() {
        problem.eval_rhs(t, q.row(p), f.row_mut(p));
        if bad.is_none() && f.row(p).iter().any(|v| !v.is_finite()) {
            bad = Some(p);
        }
    }
    bad
}

/// `r = q - u_n - dt B f` and its max-norm.
fn residual<S: Scalar>(
    tables: &SchemeTables<S>,
    q: &DenseMatrix<S>,
    f: &DenseMatrix<S>,
    u_n: &[S],
    dt: S,
    r: &mut DenseMatrix<S>,
) -> S {
    let b = tables.b();
    let (n, k) = (q.rows(), q.cols());
    let mut norm = S::zero();
    for p in 0..n {
        for c in 0..k {
            let mut acc = S::zero();
            for j in 0..n {
                acc = acc + b[(p, j)] * f[(j, c)];
            }
            let v = q[(p, c)] - u_n[c] - dt * acc;
            r[(p, c)] = v;
            norm = if v.is_nan() { v } else { norm.max(v.abs()) };
        }
    }
    norm
}

/// Max-norm of the predictor residual for coefficients `q`.
pub fn predictor_residual<S: Scalar>(
    tables: &SchemeTables<S>,
    problem: &OdeProblem<S>,
    q: &DenseMatrix<S>,
    u_n: &[S],
    t_left: S,
    dt: S,
) -> S {
    let times = node_times(tables, t_left, dt);
    let mut f = DenseMatrix::zeros(q.rows(), q.cols());
    eval_nodes(problem, &times, q, &mut f);
    let mut r = f.clone();
    residual(tables, q, &f, u_n, dt, &mut r)
}

fn scaled_tol<S: Scalar>(tol: S, u_n: &[S]) -> S {
    tol * crate::scalar::max_abs(u_n).max(S::one())
}

fn check_shapes<S: Scalar>(
    tables: &SchemeTables<S>,
    problem: &OdeProblem<S>,
    u_n: &[S],
    dt: S,
) -> Result<()> {
    if u_n.len() != problem.dim() {
        return Err(Error::Invalid(format!(
            "u_n has {} components, problem has {}",
            u_n.len(),
            problem.dim()
        )));
    }
    if !(dt > S::zero()) || !dt.is_finite() {
        return Err(Error::Invalid(format!(
            "element width must be positive, got {dt}"
        )));
    }
    let _ = tables;
    Ok(())
}

fn divergence<S: Scalar>(method: SolverKind, t_left: S, dt: S, stats: SolveStats) -> Error {
    Error::Divergence {
        method,
        element: 0,
        t_left: t_left.to_f64_lossy(),
        t_right: (t_left + dt).to_f64_lossy(),
        stats,
    }
}

/// Fixed-point iteration `q <- u_n + dt B F(q)` from the constant guess.
///
/// Every sweep evaluates `F` at all `N + 1` nodes, so `rhs_evals` is
/// `(N + 1) * iterations`. The sweep that finds the update below tolerance
/// returns the current iterate, whose `F` values are kept as the cache.
pub fn picard_solve<S: Scalar>(
    tables: &SchemeTables<S>,
    problem: &OdeProblem<S>,
    u_n: &[S],
    t_left: S,
    dt: S,
    opts: &SolverOptions<S>,
) -> Result<(ElementCoefficients<S>, SolveStats)> {
    check_shapes(tables, problem, u_n, dt)?;
    let n = tables.len();
    let times = node_times(tables, t_left, dt);
    let tol = scaled_tol(opts.tol, u_n);

    let mut q = initial_guess(u_n, tables.degree());
    let mut f = DenseMatrix::zeros(n, u_n.len());
    let mut r = f.clone();
    let mut stats = SolveStats::default();
    let mut first = None;

    for it in 1..=opts.picard_max_iter.max(1) {
        let bad = eval_nodes(problem, &times, &q, &mut f);
        stats.rhs_evals += n;
        stats.iterations = it;
        if let Some(node) = bad {
            if it == 1 {
                return Err(Error::Evaluation {
                    node,
                    t: times[node].to_f64_lossy(),
                });
            }
            stats.residual_norm = f64::INFINITY;
            return Err(divergence(SolverKind::Picard, t_left, dt, stats));
        }
        let norm = residual(tables, &q, &f, u_n, dt, &mut r);
        stats.residual_norm = norm.to_f64_lossy();
        if norm <= tol {
            stats.converged = true;
            let element = ElementCoefficients {
                coeffs: q,
                element_index: 0,
                t_left,
                dt,
                rhs_cache: Some(f),
            };
            return Ok((element, stats));
        }
        let first = *first.get_or_insert(norm.max(tol));
        if !norm.is_finite() || norm > S::of(PICARD_BLOWUP) * first {
            return Err(divergence(SolverKind::Picard, t_left, dt, stats));
        }
        for (qv, rv) in q.as_mut_slice().iter_mut().zip(r.as_slice()) {
            *qv = *qv - *rv;
        }
    }
    Err(divergence(SolverKind::Picard, t_left, dt, stats))
}

/// Forward-difference Jacobian with step `sqrt(eps) * max(1, |u_k|)`.
/// Costs `K` right-hand-side calls; `f0` is `F(u, t)`.
fn fd_jacobian<S: Scalar>(
    problem: &OdeProblem<S>,
    t: S,
    u: &[S],
    f0: &[S],
    jac: &mut DenseMatrix<S>,
) {
    let k = u.len();
    let sqrt_eps = S::eps().sqrt();
    let mut up = u.to_vec();
    let mut fp = vec![S::zero(); k];
    for j in 0..k {
        let h = sqrt_eps * u[j].abs().max(S::one());
        up[j] = u[j] + h;
        let h = up[j] - u[j];
        problem.eval_rhs(t, &up, &mut fp);
        for i in 0..k {
            jac[(i, j)] = (fp[i] - f0[i]) / h;
        }
        up[j] = u[j];
    }
}

/// Newton's method on `G(Q) = Q - dt (B x I_K) F(Q) - 1 x u_n`.
///
/// The Newton matrix is `I - dt (B x I_K) blockdiag(J_q)`. `iterations` counts
/// Newton updates, so an affine problem converges with `iterations == 1`.
pub fn newton_solve<S: Scalar>(
    tables: &SchemeTables<S>,
    problem: &OdeProblem<S>,
    u_n: &[S],
    t_left: S,
    dt: S,
    opts: &SolverOptions<S>,
) -> Result<(ElementCoefficients<S>, SolveStats)> {
    check_shapes(tables, problem, u_n, dt)?;
    if !problem.has_jacobian() && !opts.fd_jacobian {
        return Err(Error::Invalid(format!(
            "problem '{}' has no Jacobian and finite differences are disabled",
            problem.name()
        )));
    }
    let n = tables.len();
    let k = u_n.len();
    let nk = n * k;
    let times = node_times(tables, t_left, dt);
    let tol = scaled_tol(opts.tol, u_n);
    let b = tables.b();

    let mut q = initial_guess(u_n, tables.degree());
    let mut f = DenseMatrix::zeros(n, k);
    let mut r = f.clone();
    let mut jacs: Vec<DenseMatrix<S>> = (0..n).map(|_| DenseMatrix::zeros(k, k)).collect();
    let mut stats = SolveStats::default();

    for it in 0..=opts.newton_max_iter {
        let bad = eval_nodes(problem, &times, &q, &mut f);
        stats.rhs_evals += n;
        stats.iterations = it;
        if let Some(node) = bad {
            if it == 0 {
                return Err(Error::Evaluation {
                    node,
                    t: times[node].to_f64_lossy(),
                });
            }
            stats.residual_norm = f64::INFINITY;
            return Err(divergence(SolverKind::Newton, t_left, dt, stats));
        }
        let norm = residual(tables, &q, &f, u_n, dt, &mut r);
        stats.residual_norm = norm.to_f64_lossy();
        if norm <= tol {
            stats.converged = true;
            let element = ElementCoefficients {
                coeffs: q,
                element_index: 0,
                t_left,
                dt,
                rhs_cache: Some(f),
            };
            return Ok((element, stats));
        }
        if !norm.is_finite() || it == opts.newton_max_iter {
            return Err(divergence(SolverKind::Newton, t_left, dt, stats));
        }

        for (p, jac) in jacs.iter_mut().enumerate() {
            if problem.eval_jacobian(times[p], q.row(p), jac) {
                stats.jac_evals += 1;
            } else {
                fd_jacobian(problem, times[p], q.row(p), f.row(p), jac);
                stats.rhs_evals += k;
            }
        }

        let a = DenseMatrix::from_fn(nk, nk, |row, col| {
            let (p, i) = (row / k, row % k);
            let (qn, j) = (col / k, col % k);
            let id = if row == col { S::one() } else { S::zero() };
            id - dt * b[(p, qn)] * jacs[qn][(i, j)]
        });
        let rhs: Vec<S> = r.as_slice().iter().map(|v| -*v).collect();
        let delta = lu_solve(&a, &rhs)?;
        for (qv, dv) in q.as_mut_slice().iter_mut().zip(&delta) {
            *qv = *qv + *dv;
        }
    }
    unreachable!("loop returns on its last iteration")
}
