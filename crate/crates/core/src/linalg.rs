//! Dense square matrices for the handful of p x p objects the crate needs (p <= 3).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SquareMatrix<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Real> SquareMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![T::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diag(&vec![T::one(); dim])
    }

    pub fn from_diag(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn scalar(x: T) -> Self {
        Self::from_diag(&[x])
    }

    /// Builds a matrix from row-major data; `data.len()` must be a perfect square.
    pub fn from_row_major(data: Vec<T>) -> Result<Self> {
        let dim = (data.len() as f64).sqrt().round() as usize;
        if dim * dim != data.len() {
            return Err(Error::InvalidArgument(format!(
                "{} entries do not form a square matrix",
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_row_major(&self) -> &[T] {
        &self.data
    }

    pub fn as_row_major_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn diag(&self) -> Vec<T> {
        (0..self.dim).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn symmetrize(&self) -> Self {
        let half = lit::<T>(0.5);
        let mut s = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                s[(i, j)] = half * (self[(i, j)] + self[(j, i)]);
            }
        }
        s
    }

    /// Largest absolute asymmetry `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.dim {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let p = self.dim;
        let mut out = Self::zeros(p);
        for i in 0..p {
            for j in 0..p {
                out[(i, j)] = (0..p).map(|k| self[(i, k)] * other[(k, j)]).sum();
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.dim, v.len());
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// `u^T A v`.
    pub fn bilinear(&self, u: &[T], v: &[T]) -> T {
        u.iter().zip(self.mul_vec(v)).map(|(&a, b)| a * b).sum()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    /// Lower Cholesky factor, `None` unless the matrix is symmetric positive definite.
    pub fn cholesky(&self) -> Option<Self> {
        let p = self.dim;
        let mut l = Self::zeros(p);
        for j in 0..p {
            let mut d = self[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > T::zero()) {
                return None;
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in j + 1..p {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Some(l)
    }

    /// Log-determinant of a symmetric positive definite matrix.
    pub fn log_det_spd(&self) -> Option<T> {
        let l = self.cholesky()?;
        Some(lit::<T>(2.0) * l.diag().iter().map(|d| d.ln()).sum::<T>())
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<Self> {
        let p = self.dim;
        let mut a = self.clone();
        let mut inv = Self::identity(p);
        let scale = self.max_abs().max(T::min_positive_value());
        for col in 0..p {
            let pivot = (col..p)
                .max_by(|&i, &j| {
                    a[(i, col)]
                        .abs()
                        .partial_cmp(&a[(j, col)].abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap_or(col);
            if a[(pivot, col)].abs() <= scale * T::epsilon() {
                return Err(Error::InvalidArgument("matrix is singular".into()));
            }
            if pivot != col {
                for j in 0..p {
                    a.data.swap(pivot * p + j, col * p + j);
                    inv.data.swap(pivot * p + j, col * p + j);
                }
            }
            let d = a[(col, col)];
            for j in 0..p {
                a[(col, j)] /= d;
                inv[(col, j)] /= d;
            }
            for i in 0..p {
                if i != col {
                    let f = a[(i, col)];
                    if f != T::zero() {
                        for j in 0..p {
                            let (acj, icj) = (a[(col, j)], inv[(col, j)]);
                            a[(i, j)] -= f * acj;
                            inv[(i, j)] -= f * icj;
                        }
                    }
                }
            }
        }
        Ok(inv)
    }

    /// Eigenvalues of the symmetric part, ascending (cyclic Jacobi).
    pub fn symmetric_eigenvalues(&self) -> Vec<T> {
        let p = self.dim;
        let mut a = self.symmetrize();
        for _sweep in 0..100 {
            let off: T = (0..p)
                .flat_map(|i| (0..p).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)] * a[(i, j)])
                .sum();
            if off <= T::epsilon() * T::epsilon() * a.max_abs().powi(2) {
                break;
            }
            for i in 0..p {
                for j in i + 1..p {
                    let aij = a[(i, j)];
                    if aij == T::zero() {
                        continue;
                    }
                    let theta = (a[(j, j)] - a[(i, i)]) / (lit::<T>(2.0) * aij);
                    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    for k in 0..p {
                        let (aki, akj) = (a[(k, i)], a[(k, j)]);
                        a[(k, i)] = c * aki - s * akj;
                        a[(k, j)] = s * aki + c * akj;
                    }
                    for k in 0..p {
                        let (aik, ajk) = (a[(i, k)], a[(j, k)]);
                        a[(i, k)] = c * aik - s * ajk;
                        a[(j, k)] = s * aik + c * ajk;
                    }
                }
            }
        }
        let mut ev = a.diag();
        ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
        ev
    }

    pub fn min_eigenvalue(&self) -> T {
        self.symmetric_eigenvalues()
            .first()
            .copied()
            .unwrap_or(T::nan())
    }

    pub fn map<U: Real>(&self, f: impl Fn(T) -> U) -> SquareMatrix<U> {
        SquareMatrix {
            dim: self.dim,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }
}

impl<T> std::ops::Index<(usize, usize)> for SquareMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.dim + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for SquareMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.dim + j]
    }
}
