//! Small dense linear algebra: LU with partial pivoting, solves, inverses,
//! determinants. Works for any [`Field`], which covers real scalars and
//! `Complex<S>` (needed for `E - zB` in the stability analysis).
//!
//! Matrices here are at most a few hundred rows, so everything is row-major
//! `Vec` storage without blocking.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::{Float, One, Zero};
use thiserror::Error;

use crate::scalar::Scalar;

/// Entry type of a [`DenseMatrix`].
pub trait Field:
    Copy
    + Debug
    + Send
    + Sync
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    type Real: Scalar;

    /// Magnitude used for pivoting and norms.
    fn modulus(self) -> Self::Real;
    fn from_real(r: Self::Real) -> Self;
    fn is_finite_value(self) -> bool;
}

impl<S: Scalar> Field for S {
    type Real = S;

    fn modulus(self) -> S {
        self.abs()
    }
    fn from_real(r: S) -> S {
        r
    }
    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
}

impl<S: Scalar> Field for Complex<S> {
    type Real = S;

    fn modulus(self) -> S {
        self.re.hypot(self.im)
    }
    fn from_real(r: S) -> Self {
        Complex::new(r, S::zero())
    }
    fn is_finite_value(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is singular to working precision (pivot column {column})")]
    Singular { column: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Field> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Builds a matrix from row-major data. Panics if the length does not match.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(rows * cols, data.len(), "row-major data length mismatch");
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn map<U: Field>(&self, f: impl Fn(T) -> U) -> DenseMatrix<U> {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::Dimension {
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] = out.data[i * other.cols + j] + a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[T]) -> Result<Vec<T>, LinalgError> {
        if x.len() != self.cols {
            return Err(LinalgError::Dimension {
                expected: self.cols,
                got: x.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect())
    }

    /// Largest entry magnitude.
    pub fn max_norm(&self) -> T::Real {
        self.data
            .iter()
            .fold(<T::Real as Zero>::zero(), |acc, x| acc.max(x.modulus()))
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite_value())
    }

    pub fn lu(&self) -> Result<LuDecomposition<T>, LinalgError> {
        LuDecomposition::new(self)
    }
}

impl<T> std::ops::Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// `PA = LU` with unit lower-triangular `L`, stored packed.
#[derive(Debug, Clone)]
pub struct LuDecomposition<T> {
    n: usize,
    lu: Vec<T>,
    perm: Vec<usize>,
    swaps: usize,
}

impl<T: Field> LuDecomposition<T> {
    /// A pivot is rejected when its magnitude falls below
    /// `64 * eps * (largest magnitude in its original column)`.
    pub fn new(a: &DenseMatrix<T>) -> Result<Self, LinalgError> {
        Self::factor(a, true)
    }

    fn factor(a: &DenseMatrix<T>, strict: bool) -> Result<Self, LinalgError> {
        if !a.is_square() {
            return Err(LinalgError::NotSquare {
                rows: a.rows,
                cols: a.cols,
            });
        }
        let n = a.rows;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut swaps = 0;

        let eps = T::Real::eps();
        let sixty_four = T::Real::of(64.0);
        let col_scale: Vec<T::Real> = (0..n)
            .map(|j| {
                (0..n).fold(<T::Real as Zero>::zero(), |acc, i| {
                    acc.max(a[(i, j)].modulus())
                })
            })
            .collect();

        for k in 0..n {
            let (mut p, mut best) = (k, lu[k * n + k].modulus());
            for i in k + 1..n {
                let m = lu[i * n + k].modulus();
                if m > best {
                    p = i;
                    best = m;
                }
            }
            let threshold = sixty_four * eps * col_scale[k];
            if best == <T::Real as Zero>::zero() || (strict && !(best > threshold)) {
                return Err(LinalgError::Singular { column: k });
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                swaps += 1;
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let factor = lu[i * n + k] / pivot;
                lu[i * n + k] = factor;
                if factor == T::zero() {
                    continue;
                }
                for j in k + 1..n {
                    lu[i * n + j] = lu[i * n + j] - factor * lu[k * n + j];
                }
            }
        }
        Ok(Self { n, lu, perm, swaps })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>, LinalgError> {
        let n = self.n;
        if b.len() != n {
            return Err(LinalgError::Dimension {
                expected: n,
                got: b.len(),
            });
        }
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s = s - self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s = s - self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        Ok(x)
    }

    pub fn determinant(&self) -> T {
        let n = self.n;
        let mut det = (0..n).fold(T::one(), |acc, i| acc * self.lu[i * n + i]);
        if self.swaps % 2 == 1 {
            det = -det;
        }
        det
    }

    pub fn inverse(&self) -> DenseMatrix<T> {
        let n = self.n;
        let mut inv = DenseMatrix::zeros(n, n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = T::zero());
            e[j] = T::one();
            let col = self.solve(&e).expect("dimension checked");
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv
    }
}

/// Solves `A x = b` by LU with partial pivoting.
pub fn lu_solve<T: Field>(a: &DenseMatrix<T>, b: &[T]) -> Result<Vec<T>, LinalgError> {
    a.lu()?.solve(b)
}

pub fn mat_inverse<T: Field>(a: &DenseMatrix<T>) -> Result<DenseMatrix<T>, LinalgError> {
    Ok(a.lu()?.inverse())
}

/// Determinant, zero for matrices the LU flags as singular.
/// Determinant by partial-pivoting elimination. Tiny pivots are kept, so a
/// nearly singular matrix yields a small determinant rather than zero.
pub fn determinant<T: Field>(a: &DenseMatrix<T>) -> Result<T, LinalgError> {
    match LuDecomposition::factor(a, false) {
        Ok(lu) => Ok(lu.determinant()),
        Err(LinalgError::Singular { .. }) => Ok(T::zero()),
        Err(e) => Err(e),
    }
}
