use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};

/// Quadratic-plus-affine part `Q(x) + b·x + c` with `Q(x) = ½ xᵀAx`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticPart {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: f64,
}

const SYMMETRY_TOL: f64 = 1e-12;

impl QuadraticPart {
    /// Builds a quadratic part, requiring `a` to be symmetric positive definite.
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, c: f64) -> Result<Self> {
        let q = Self::new_unchecked(a, b, c)?;
        if !q.is_positive_definite() {
            return invalid("matrix A is not positive definite");
        }
        Ok(q)
    }

    /// Like [`QuadraticPart::new`] but accepts any symmetric `a` (used for `A = 0`
    /// in Dirichlet problems and for flagged estimates).
    pub fn new_unchecked(a: DMatrix<f64>, b: DVector<f64>, c: f64) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || n > 3 || a.ncols() != n {
            return invalid(format!("A must be square with 1 <= n <= 3, got {}x{}", a.nrows(), a.ncols()));
        }
        if b.len() != n {
            return invalid(format!("b has length {}, expected {n}", b.len()));
        }
        let scale = a.amax().max(1.0);
        for i in 0..n {
            for j in 0..i {
                if (a[(i, j)] - a[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return invalid("matrix A is not symmetric");
                }
            }
        }
        if !a.iter().all(|x| x.is_finite()) || !b.iter().all(|x| x.is_finite()) || !c.is_finite() {
            return invalid("quadratic part has non-finite entries");
        }
        Ok(Self { a, b, c })
    }

    /// Pure quadratic `½ xᵀAx` with `b = 0`, `c = 0`.
    pub fn from_matrix(a: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        Self::new(a, DVector::zeros(n), 0.0)
    }

    pub fn identity(n: usize) -> Self {
        Self { a: DMatrix::identity(n, n), b: DVector::zeros(n), c: 0.0 }
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        Self::from_matrix(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    /// Zero quadratic part of dimension `n` (pure `det(D²u)` operator).
    pub fn zero(n: usize) -> Self {
        Self { a: DMatrix::zeros(n, n), b: DVector::zeros(n), c: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn det(&self) -> f64 {
        self.a.determinant()
    }

    pub fn is_positive_definite(&self) -> bool {
        self.a.clone().cholesky().is_some()
    }

    /// `½ xᵀAx` only.
    pub fn quadratic(&self, x: &[f64]) -> f64 {
        let n = self.dim();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += x[i] * self.a[(i, j)] * x[j];
            }
        }
        0.5 * s
    }

    pub fn linear(&self, x: &[f64]) -> f64 {
        (0..self.dim()).map(|i| self.b[i] * x[i]).sum()
    }

    /// Full evaluation `½ xᵀAx + b·x + c`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.quadratic(x) + self.linear(x) + self.c
    }

    /// `eᵀAe / ‖e‖²` for a nonzero direction.
    pub fn rayleigh(&self, e: &[f64]) -> f64 {
        let n = self.dim();
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..n {
            den += e[i] * e[i];
            for j in 0..n {
                num += e[i] * self.a[(i, j)] * e[j];
            }
        }
        num / den
    }

    /// Row-major copy of `A`.
    pub fn a_row_major(&self) -> Vec<f64> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(self.a[(i, j)]);
            }
        }
        out
    }
}
