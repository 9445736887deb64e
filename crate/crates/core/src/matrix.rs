//! Dense row-major `f64` matrices and symmetric Cholesky factorization.
//!
//! Deliberately minimal: the only factorization the project needs is the
//! lower-triangular Cholesky of a symmetric covariance matrix, with a jitter
//! ladder for borderline conditioning.

use crate::error::{Error, Result};

/// Row-major matrix of 64-bit floats.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.values[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || values.len() != rows * cols {
            return Err(Error::Shape(format!(
                "matrix {rows}x{cols} needs {} values, got {}",
                rows * cols,
                values.len()
            )));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::Shape("empty matrix".into()));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged rows".into()));
        }
        let values = rows.iter().flatten().copied().collect();
        Ok(Self {
            rows: rows.len(),
            cols,
            values,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Maximum absolute asymmetry `max |A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols.min(self.rows) {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// `A x` for a column vector `x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::Shape(format!(
                "matvec: {}x{} against vector of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
            })
            .collect())
    }

    /// `A A^T`, used by tests to verify factorizations.
    pub fn mul_transpose(&self) -> Matrix {
        let n = self.rows;
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let s: f64 = self
                    .row(i)
                    .iter()
                    .zip(self.row(j))
                    .map(|(a, b)| a * b)
                    .sum();
                out.set(i, j, s);
                out.set(j, i, s);
            }
        }
        out
    }
}

const SYMMETRY_TOL: f64 = 1e-12;

/// Lower-triangular Cholesky factor `L` with `L L^T = c + jitter I`.
///
/// If the factorization hits a non-positive pivot the jitter is scaled by 10
/// and the factorization retried, up to three times, before reporting the
/// matrix as not positive definite.
pub fn cholesky(c: &Matrix, jitter: f64) -> Result<Matrix> {
    if !c.is_square() {
        return Err(Error::Shape(format!(
            "cholesky needs a square matrix, got {}x{}",
            c.rows(),
            c.cols()
        )));
    }
    if jitter < 0.0 {
        return Err(Error::Domain(format!("negative jitter {jitter}")));
    }
    let asym = c.asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(Error::Shape(format!(
            "cholesky input asymmetric by {asym:.3e} (tolerance {SYMMETRY_TOL:.0e})"
        )));
    }

    let mut jit = jitter;
    for attempt in 0..4 {
        match cholesky_once(c, jit) {
            Some(l) => return Ok(l),
            None => {
                // escalate: 0 -> 1e-10 on the first retry, then x10
                jit = if jit == 0.0 { 1e-10 } else { jit * 10.0 };
                if attempt == 3 {
                    break;
                }
            }
        }
    }
    Err(Error::Numeric(format!(
        "matrix not positive definite after jitter retries (final jitter {jit:.3e})"
    )))
}

fn cholesky_once(c: &Matrix, jitter: f64) -> Option<Matrix> {
    let n = c.rows();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = c.get(i, j) + if i == j { jitter } else { 0.0 };
            // dot of the already-computed prefixes of rows i and j
            let (ri, rj) = (i * n, j * n);
            for k in 0..j {
                sum -= l.values[ri + k] * l.values[rj + k];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return None;
                }
                l.values[ri + j] = sum.sqrt();
            } else {
                l.values[ri + j] = sum / l.values[rj + j];
            }
        }
    }
    Some(l)
}
