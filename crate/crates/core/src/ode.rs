use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

/// `rhs(t, u, out)` writes `F(u, t)` into `out`.
pub type RhsFn<S> = Arc<dyn Fn(S, &[S], &mut [S]) + Send + Sync>;
/// `jac(t, u, out)` writes `dF/du` into the `K x K` matrix `out`.
pub type JacobianFn<S> = Arc<dyn Fn(S, &[S], &mut DenseMatrix<S>) + Send + Sync>;
/// `exact(t)` returns the exact solution vector.
pub type ExactFn<S> = Arc<dyn Fn(S) -> Vec<S> + Send + Sync>;

/// First-order system `u' = F(u, t)`, `u(t0) = u0`, on `[t0, t_end]`.
#[derive(Clone)]
pub struct OdeProblem<S: Scalar> {
    name: String,
    dim: usize,
    rhs: RhsFn<S>,
    jacobian: Option<JacobianFn<S>>,
    exact: Option<ExactFn<S>>,
    u0: Vec<S>,
    t0: S,
    t_end: S,
}

impl<S: Scalar> fmt::Debug for OdeProblem<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OdeProblem")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("u0", &self.u0)
            .field("t0", &self.t0)
            .field("t_end", &self.t_end)
            .field("jacobian", &self.jacobian.is_some())
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

impl<S: Scalar> OdeProblem<S> {
    pub fn new<F>(name: impl Into<String>, u0: Vec<S>, t0: S, t_end: S, rhs: F) -> Result<Self>
    where
        F: Fn(S, &[S], &mut [S]) + Send + Sync + 'static,
    {
        let name = name.into();
        if u0.is_empty() {
            return Err(Error::Invalid(format!(
                "{name}: system dimension must be at least 1"
            )));
        }
        if !(t_end > t0) || !t0.is_finite() || !t_end.is_finite() {
            return Err(Error::Invalid(format!(
                "{name}: need finite t0 < t_end, got [{t0}, {t_end}]"
            )));
        }
        if u0.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!(
                "{name}: initial value is not finite"
            )));
        }
        Ok(Self {
            name,
            dim: u0.len(),
            rhs: Arc::new(rhs),
            jacobian: None,
            exact: None,
            u0,
            t0,
            t_end,
        })
    }

    pub fn with_jacobian<J>(mut self, jac: J) -> Self
    where
        J: Fn(S, &[S], &mut DenseMatrix<S>) + Send + Sync + 'static,
    {
        self.jacobian = Some(Arc::new(jac));
        self
    }

    pub fn with_exact<E>(mut self, exact: E) -> Self
    where
        E: Fn(S) -> Vec<S> + Send + Sync + 'static,
    {
        self.exact = Some(Arc::new(exact));
        self
    }

    /// Same equations restarted from `u0` at `t0`.
    pub fn with_initial(mut self, t0: S, u0: Vec<S>) -> Result<Self> {
        if u0.len() != self.dim {
            return Err(Error::Invalid(format!(
                "initial value has {} components, problem has {}",
                u0.len(),
                self.dim
            )));
        }
        if !(self.t_end > t0) {
            return Err(Error::Invalid(format!(
                "t0 = {t0} is not below t_end = {}",
                self.t_end
            )));
        }
        self.t0 = t0;
        self.u0 = u0;
        Ok(self)
    }

    pub fn with_end(mut self, t_end: S) -> Result<Self> {
        if !(t_end > self.t0) {
            return Err(Error::Invalid(format!(
                "t_end = {t_end} is not above t0 = {}",
                self.t0
            )));
        }
        self.t_end = t_end;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn u0(&self) -> &[S] {
        &self.u0
    }

    pub fn t0(&self) -> S {
        self.t0
    }

    pub fn t_end(&self) -> S {
        self.t_end
    }

    pub fn has_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    pub fn has_exact(&self) -> bool {
        self.exact.is_some()
    }

    #[inline]
    pub fn eval_rhs(&self, t: S, u: &[S], out: &mut [S]) {
        (self.rhs)(t, u, out)
    }

    /// Returns `false` when no analytic Jacobian is attached.
    pub fn eval_jacobian(&self, t: S, u: &[S], out: &mut DenseMatrix<S>) -> bool {
        match &self.jacobian {
            Some(j) => {
                j(t, u, out);
                true
            }
            None => false,
        }
    }

    pub fn exact(&self, t: S) -> Option<Vec<S>> {
        self.exact.as_ref().map(|e| e(t))
    }

    pub fn exact_fn(&self) -> Option<&ExactFn<S>> {
        self.exact.as_ref()
    }
}
