//! Degree-dependent constants of the scheme.
//!
//! The local solution on an element is expanded in the Lagrange basis built
//! on the `N + 1` Gauss-Legendre nodes of `[0, 1]`. Everything the predictor
//! and corrector need (quadrature, the stiffness-like matrix `K`, the
//! diagonal mass matrix, and `B = K^-1 diag(M)`) is computed once here.

use crate::error::{Error, Result};
use crate::linalg::{mat_inverse, DenseMatrix};
use crate::scalar::Scalar;

/// Legendre polynomial `P_n(x)` and its derivative by the three-term recurrence.
fn legendre_with_derivative<S: Scalar>(n: usize, x: S) -> (S, S) {
    if n == 0 {
        return (S::one(), S::zero());
    }
    let (mut p_prev, mut p) = (S::one(), x);
    for k in 1..n {
        let kf = S::of_usize(k);
        let next = ((kf + kf + S::one()) * x * p - kf * p_prev) / (kf + S::one());
        p_prev = p;
        p = next;
    }
    let dp = S::of_usize(n) * (x * p - p_prev) / (x * x - S::one());
    (p, dp)
}

/// Gauss-Legendre rule with `degree + 1` points mapped to `[0, 1]`.
///
/// Nodes come out strictly increasing and exactly mirrored about 0.5.
pub fn gauss_legendre_01<S: Scalar>(degree: usize) -> (Vec<S>, Vec<S>) {
    let m = degree + 1;
    let mut nodes = vec![S::zero(); m];
    let mut weights = vec![S::zero(); m];
    let half = S::of(0.5);
    let tol = S::of(4.0) * S::eps();

    // Roots on the negative half of [-1, 1]; the rest follow by symmetry.
    for i in 0..m.div_ceil(2) {
        let mut x = -(S::PI() * S::of_usize(2 * i + 1) / S::of_usize(2 * m)).cos();
        if m % 2 == 1 && i == m / 2 {
            x = S::zero();
        } else {
            for _ in 0..100 {
                let (p, dp) = legendre_with_derivative(m, x);
                let dx = p / dp;
                x = x - dx;
                if dx.abs() <= tol {
                    break;
                }
            }
        }
        let (_, dp) = legendre_with_derivative(m, x);
        // 2 / ((1 - x^2) P'^2) on [-1, 1], halved by the map to [0, 1].
        let w = S::one() / ((S::one() - x * x) * dp * dp);
        nodes[i] = (S::one() + x) * half;
        nodes[m - 1 - i] = (S::one() - x) * half;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

/// All constants of the degree-`N` scheme. Immutable once built.
#[derive(Debug, Clone)]
pub struct SchemeTables<S: Scalar> {
    degree: usize,
    nodes: Vec<S>,
    weights: Vec<S>,
    bary_weights: Vec<S>,
    /// `diff[(l, q)] = phi_q'(tau_l)`.
    diff: DenseMatrix<S>,
    k: DenseMatrix<S>,
    k_inv: DenseMatrix<S>,
    mass: Vec<S>,
    b: DenseMatrix<S>,
    phi_at_0: Vec<S>,
    phi_at_1: Vec<S>,
}

fn barycentric_weights<S: Scalar>(nodes: &[S]) -> Vec<S> {
    let mut lambda: Vec<S> = nodes
        .iter()
        .enumerate()
        .map(|(j, &tj)| {
            let prod = nodes
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != j)
                .fold(S::one(), |acc, (_, &tk)| acc * (tj - tk));
            S::one() / prod
        })
        .collect();
    // The barycentric formula is invariant to a common scale; keep values O(1).
    let scale = lambda.iter().fold(S::zero(), |m, v| m.max(v.abs()));
    lambda.iter_mut().for_each(|v| *v = *v / scale);
    lambda
}

fn eval_basis<S: Scalar>(nodes: &[S], lambda: &[S], tau: S) -> Vec<S> {
    let mut out = vec![S::zero(); nodes.len()];
    if let Some(j) = nodes.iter().position(|&t| t == tau) {
        out[j] = S::one();
        return out;
    }
    let mut denom = S::zero();
    for (j, (&tj, &lj)) in nodes.iter().zip(lambda).enumerate() {
        let c = lj / (tau - tj);
        out[j] = c;
        denom = denom + c;
    }
    out.iter_mut().for_each(|v| *v = *v / denom);
    out
}

impl<S: Scalar> SchemeTables<S> {
    /// Builds the tables for basis degree `degree`.
    ///
    /// `K_pq = phi_p(1) phi_q(1) - int_0^1 phi_p' phi_q`, where the integral is
    /// exact under the nodal rule and collapses to `w_q phi_p'(tau_q)`.
    pub fn build(degree: usize) -> Result<Self> {
        let n = degree + 1;
        let (nodes, weights) = gauss_legendre_01::<S>(degree);
        let bary_weights = barycentric_weights(&nodes);

        let mut diff = DenseMatrix::zeros(n, n);
        for l in 0..n {
            let mut diag = S::zero();
            for q in 0..n {
                if q != l {
                    let d = (bary_weights[q] / bary_weights[l]) / (nodes[l] - nodes[q]);
                    diff[(l, q)] = d;
                    diag = diag - d;
                }
            }
            diff[(l, l)] = diag;
        }

        let phi_at_0 = eval_basis(&nodes, &bary_weights, S::zero());
        let phi_at_1 = eval_basis(&nodes, &bary_weights, S::one());

        let k = DenseMatrix::from_fn(n, n, |p, q| {
            phi_at_1[p] * phi_at_1[q] - weights[q] * diff[(q, p)]
        });

        let mass = Self::integrate_mass_diagonal(&nodes, &bary_weights, degree);

        let k_inv = mat_inverse(&k).map_err(|e| {
            Error::Invalid(format!(
                "K matrix for degree {degree} is not invertible: {e}"
            ))
        })?;
        let b = DenseMatrix::from_fn(n, n, |p, q| k_inv[(p, q)] * mass[q]);

        Ok(Self {
            degree,
            nodes,
            weights,
            bary_weights,
            diff,
            k,
            k_inv,
            mass,
            b,
            phi_at_0,
            phi_at_1,
        })
    }

    // Diagonal of the mass matrix from an (N+2)-point rule, exact for the
    // degree-2N integrands, rather than assumed equal to the nodal weights.
    fn integrate_mass_diagonal(nodes: &[S], lambda: &[S], degree: usize) -> Vec<S> {
        let (xs, ws) = gauss_legendre_01::<S>(degree + 1);
        let mut mass = vec![S::zero(); nodes.len()];
        for (&x, &w) in xs.iter().zip(&ws) {
            let phi = eval_basis(nodes, lambda, x);
            for (m, p) in mass.iter_mut().zip(&phi) {
                *m = *m + w * *p * *p;
            }
        }
        mass
    }

    /// Full mass matrix `int phi_p phi_q` from an (N+2)-point rule.
    pub fn mass_matrix_full(&self) -> DenseMatrix<S> {
        let n = self.len();
        let (xs, ws) = gauss_legendre_01::<S>(self.degree + 1);
        let mut m = DenseMatrix::zeros(n, n);
        for (&x, &w) in xs.iter().zip(&ws) {
            let phi = self.basis_eval_all(x);
            for p in 0..n {
                for q in 0..n {
                    m[(p, q)] = m[(p, q)] + w * phi[p] * phi[q];
                }
            }
        }
        m
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of nodes, `degree + 1`.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[S] {
        &self.nodes
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn bary_weights(&self) -> &[S] {
        &self.bary_weights
    }

    pub fn diff_matrix(&self) -> &DenseMatrix<S> {
        &self.diff
    }

    pub fn k(&self) -> &DenseMatrix<S> {
        &self.k
    }

    pub fn k_inv(&self) -> &DenseMatrix<S> {
        &self.k_inv
    }

    /// Diagonal of the mass matrix.
    pub fn mass(&self) -> &[S] {
        &self.mass
    }

    pub fn b(&self) -> &DenseMatrix<S> {
        &self.b
    }

    pub fn phi_at_0(&self) -> &[S] {
        &self.phi_at_0
    }

    pub fn phi_at_1(&self) -> &[S] {
        &self.phi_at_1
    }

    /// `[phi_0(tau), ..., phi_N(tau)]` by the barycentric formula.
    /// `tau` outside `[0, 1]` is allowed.
    pub fn basis_eval_all(&self, tau: S) -> Vec<S> {
        eval_basis(&self.nodes, &self.bary_weights, tau)
    }

    /// Rows are `basis_eval_all(points[m])`, shape `points.len() x (N+1)`.
    pub fn basis_matrix(&self, points: &[S]) -> DenseMatrix<S> {
        let n = self.len();
        let mut m = DenseMatrix::zeros(points.len(), n);
        for (i, &x) in points.iter().enumerate() {
            m.row_mut(i).copy_from_slice(&self.basis_eval_all(x));
        }
        m
    }
}

/// Convenience wrapper matching [`SchemeTables::build`].
pub fn build_tables<S: Scalar>(degree: usize) -> Result<SchemeTables<S>> {
    SchemeTables::build(degree)
}
