//! Small dense linear algebra: row-major matrices, LU determinants,
//! Gauss-Jordan inverse and a cyclic Jacobi symmetric eigensolver.

use std::ops::{Index, IndexMut};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense row-major matrix.
/// Multiply-add count above which products run on the thread pool.
const PARALLEL_WORK: usize = 1 << 18;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
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

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length does not match shape");
        Self { rows, cols, data }
    }

    pub fn diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect(),
        }
    }

    /// `self + s * other`, in place.
    pub fn axpy(&mut self, s: T, other: &Self) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        if !self.is_square() {
            return false;
        }
        let scale = self.max_abs().max(T::one());
        (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol * scale))
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Matrix product, parallel over output rows for large operands.
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let n = rhs.cols;
        let mut out = vec![T::zero(); self.rows * n];
        let kernel = |(i, out_row): (usize, &mut [T])| {
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        };
        if self.rows * self.cols * n >= PARALLEL_WORK {
            out.par_chunks_mut(n.max(1)).enumerate().for_each(kernel);
        } else {
            out.chunks_mut(n.max(1)).enumerate().for_each(kernel);
        }
        Self {
            rows: self.rows,
            cols: n,
            data: out,
        }
    }

    /// `self * diag(d) * rhs`.
    pub fn matmul_weighted(&self, d: &[T], rhs: &Self) -> Self {
        assert_eq!(self.cols, d.len());
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let n = rhs.cols;
        let mut out = vec![T::zero(); self.rows * n];
        let kernel = |(i, out_row): (usize, &mut [T])| {
            for (k, (&a, &w)) in self.row(i).iter().zip(d).enumerate() {
                let aw = a * w;
                if aw == T::zero() {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += aw * b;
                }
            }
        };
        if self.rows * self.cols * n >= PARALLEL_WORK {
            out.par_chunks_mut(n.max(1)).enumerate().for_each(kernel);
        } else {
            out.chunks_mut(n.max(1)).enumerate().for_each(kernel);
        }
        Self {
            rows: self.rows,
            cols: n,
            data: out,
        }
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    /// Determinant by LU factorization with partial pivoting.
    pub fn determinant(&self) -> T {
        assert!(self.is_square(), "determinant of non-square matrix");
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = T::one();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| {
                    a[i * n + col]
                        .abs()
                        .partial_cmp(&a[j * n + col].abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap();
            if a[pivot * n + col] == T::zero() {
                return T::zero();
            }
            if pivot != col {
                for k in 0..n {
                    a.swap(col * n + k, pivot * n + k);
                }
                det = -det;
            }
            let p = a[col * n + col];
            det *= p;
            for i in col + 1..n {
                let f = a[i * n + col] / p;
                if f == T::zero() {
                    continue;
                }
                for k in col..n {
                    let v = a[col * n + k];
                    a[i * n + k] -= f * v;
                }
            }
        }
        det
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::InvalidArgument("inverse of non-square matrix".into()));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        let scale = self.max_abs();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| {
                    a[(i, col)]
                        .abs()
                        .partial_cmp(&a[(j, col)].abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap();
            if a[(pivot, col)].abs() <= T::epsilon() * scale {
                return Err(Error::InvalidArgument("matrix is singular".into()));
            }
            if pivot != col {
                for k in 0..n {
                    a.data.swap(col * n + k, pivot * n + k);
                    inv.data.swap(col * n + k, pivot * n + k);
                }
            }
            let p = a[(col, col)];
            for k in 0..n {
                a[(col, k)] /= p;
                inv[(col, k)] /= p;
            }
            for i in 0..n {
                if i == col {
                    continue;
                }
                let f = a[(i, col)];
                if f == T::zero() {
                    continue;
                }
                for k in 0..n {
                    let (av, iv) = (a[(col, k)], inv[(col, k)]);
                    a[(i, k)] -= f * av;
                    inv[(i, k)] -= f * iv;
                }
            }
        }
        Ok(inv)
    }

    /// Eigenvalues (ascending) and eigenvectors (as columns) of a symmetric
    /// matrix by cyclic Jacobi rotations.
    pub fn symmetric_eigen(&self) -> (Vec<T>, Self) {
        assert!(self.is_square(), "eigen-decomposition of non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut v = Self::identity(n);
        let tiny = T::epsilon() * T::epsilon();
        for _sweep in 0..100 {
            let off: T = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)] * a[(i, j)])
                .sum();
            let diag: T = (0..n).map(|i| a[(i, i)] * a[(i, i)]).sum();
            if off <= tiny * diag.max(T::min_positive_value()) || off == T::zero() {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    if apq == T::zero() {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (T::lit(2.0) * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let (akp, akq) = (a[(k, p)], a[(k, q)]);
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap_or(std::cmp::Ordering::Equal));
        let values = order.iter().map(|&i| a[(i, i)]).collect();
        let vectors = Self::from_fn(n, n, |r, c| v[(r, order[c])]);
        (values, vectors)
    }

    pub fn symmetric_eigenvalues(&self) -> Vec<T> {
        self.symmetric_eigen().0
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

#[inline]
pub(crate) fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

#[inline]
pub(crate) fn cross<T: Real>(a: &[T], b: &[T]) -> [T; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}
