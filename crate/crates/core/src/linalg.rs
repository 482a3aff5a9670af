//! Small dense linear algebra on row-major matrices.
//!
//! Every operator in this crate lives in a space of a handful of dimensions
//! (blocks of a crawler, links of a chain), so plain `Vec` storage with
//! Jacobi eigensolves and pivoted elimination is all that is needed.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense row-major matrix. Serializes as nested row arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<S>>", into = "Vec<Vec<S>>")]
#[serde(bound(serialize = "S: Real", deserialize = "S: Real"))]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Real> TryFrom<Vec<Vec<S>>> for Matrix<S> {
    type Error = Error;

    fn try_from(rows: Vec<Vec<S>>) -> Result<Self> {
        Matrix::from_rows(rows)
    }
}

impl<S: Real> From<Matrix<S>> for Vec<Vec<S>> {
    fn from(m: Matrix<S>) -> Self {
        m.to_rows()
    }
}

impl<S: Real> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![S::one(); n])
    }

    pub fn from_diag(diag: &[S]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Structural("ragged matrix rows".into()));
        }
        let data = rows.into_iter().flatten().collect();
        Ok(Self { rows: r, cols: c, data })
    }

    pub fn to_rows(&self) -> Vec<Vec<S>> {
        self.data.chunks(self.cols.max(1)).take(self.rows).map(<[S]>::to_vec).collect()
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

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn diagonal(&self) -> Vec<S> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `A x`
    pub fn mul_vec(&self, x: &[S]) -> Vec<S> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `Aᵀ y`
    pub fn tr_mul_vec(&self, y: &[S]) -> Vec<S> {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![S::zero(); self.cols];
        for (i, &yi) in y.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * yi;
            }
        }
        out
    }

    pub fn mul_mat(&self, other: &Self) -> Self {
        debug_assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == S::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, c: S) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&a| a * c).collect() }
    }

    /// `(A + Aᵀ)/2`
    pub fn symmetric_part(&self) -> Self {
        self.add(&self.transpose()).scale(S::lit(0.5))
    }

    /// `⟨A x, x⟩`
    pub fn quad_form(&self, x: &[S]) -> S {
        dot(&self.mul_vec(x), x)
    }

    pub fn max_abs(&self) -> S {
        self.data.iter().fold(S::zero(), |m, &a| m.max(a.abs()))
    }

    pub fn is_symmetric(&self, tol: S) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }

    pub fn is_diagonal(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self[(i, j)] == S::zero()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|a| a.is_finite())
    }

    /// Eigen-decomposition of the symmetric part by cyclic Jacobi rotations.
    ///
    /// Eigenvalues are sorted ascending; `vectors` holds the matching
    /// orthonormal eigenvectors as columns.
    pub fn symmetric_eigen(&self) -> SymmetricEigen<S> {
        assert!(self.is_square(), "eigen-decomposition of a non-square matrix");
        let n = self.rows;
        let mut a = self.symmetric_part();
        let mut v = Self::identity(n);
        let scale = a.max_abs().max(S::min_positive_value());
        for _sweep in 0..100 {
            let mut off = S::zero();
            for i in 0..n {
                for j in 0..i {
                    off += a[(i, j)] * a[(i, j)];
                }
            }
            if off.sqrt() <= S::epsilon() * scale * S::lit(1e-2) {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    if apq == S::zero() {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (S::lit(2.0) * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + S::one()).sqrt());
                    let c = S::one() / (t * t + S::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap_or(std::cmp::Ordering::Equal));
        let values = order.iter().map(|&i| a[(i, i)]).collect();
        let mut vectors = Self::zeros(n, n);
        for (col, &src) in order.iter().enumerate() {
            for k in 0..n {
                vectors[(k, col)] = v[(k, src)];
            }
        }
        SymmetricEigen { values, vectors }
    }

    /// Solves `A x = b` by Gaussian elimination with partial pivoting.
    /// Returns `None` when `A` is numerically singular.
    pub fn solve(&self, b: &[S]) -> Option<Vec<S>> {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut x = b.to_vec();
        let scale = a.max_abs().max(S::min_positive_value());
        for col in 0..n {
            let pivot = (col..n).max_by(|&i, &j| {
                a[(i, col)].abs().partial_cmp(&a[(j, col)].abs()).unwrap_or(std::cmp::Ordering::Equal)
            })?;
            if a[(pivot, col)].abs() <= S::epsilon() * scale * S::lit(n as f64 * 10.0) {
                return None;
            }
            if pivot != col {
                for k in 0..n {
                    let tmp = a[(col, k)];
                    a[(col, k)] = a[(pivot, k)];
                    a[(pivot, k)] = tmp;
                }
                x.swap(col, pivot);
            }
            for i in (col + 1)..n {
                let f = a[(i, col)] / a[(col, col)];
                if f == S::zero() {
                    continue;
                }
                for k in col..n {
                    let v = a[(col, k)];
                    a[(i, k)] -= f * v;
                }
                let xc = x[col];
                x[i] -= f * xc;
            }
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= a[(i, k)] * x[k];
            }
            x[i] = s / a[(i, i)];
        }
        Some(x)
    }

    pub fn inverse(&self) -> Option<Self> {
        let n = self.rows;
        let mut inv = Self::zeros(n, n);
        for j in 0..n {
            let mut e = vec![S::zero(); n];
            e[j] = S::one();
            let col = self.solve(&e)?;
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Some(inv)
    }

    /// Numerical rank from the eigenvalues of `A Aᵀ`.
    pub fn rank(&self) -> usize {
        let gram = self.mul_mat(&self.transpose());
        let eig = gram.symmetric_eigen();
        let top = eig.values.last().copied().unwrap_or(S::zero()).max(S::zero());
        let cut = top * S::epsilon() * S::lit(1e4 * (self.rows.max(self.cols) as f64));
        eig.values.iter().filter(|&&l| l > cut).count()
    }
}

impl<S> Index<(usize, usize)> for Matrix<S> {
    type Output = S;

    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> IndexMut<(usize, usize)> for Matrix<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

#[derive(Debug, Clone)]
pub struct SymmetricEigen<S> {
    pub values: Vec<S>,
    pub vectors: Matrix<S>,
}

impl<S: Real> SymmetricEigen<S> {
    pub fn min(&self) -> S {
        self.values.first().copied().unwrap_or(S::zero())
    }

    pub fn max(&self) -> S {
        self.values.last().copied().unwrap_or(S::zero())
    }
}

/// Affine description of the fibers `{x : P x = z}` of a surjective map `P`.
///
/// `particular(z)` is the minimum-norm solution; `kernel` holds an
/// orthonormal basis of `ker P` as columns.
#[derive(Debug, Clone)]
pub struct FiberMap<S> {
    map: Matrix<S>,
    gram_inv: Matrix<S>,
    pub kernel: Matrix<S>,
}

impl<S: Real> FiberMap<S> {
    pub fn new(map: &Matrix<S>) -> Result<Self> {
        let z_dim = map.rows();
        let n = map.cols();
        if map.rank() != z_dim {
            return Err(Error::Structural("shape map is not surjective (rank deficient)".into()));
        }
        let gram = map.mul_mat(&map.transpose());
        let gram_inv = gram
            .inverse()
            .ok_or_else(|| Error::Structural("shape map Gram matrix is singular".into()))?;
        // eigenvectors of PᵀP with the n - z_dim smallest eigenvalues span ker P
        let eig = map.transpose().mul_mat(map).symmetric_eigen();
        let k = n - z_dim;
        let mut kernel = Matrix::zeros(n, k);
        for c in 0..k {
            for r in 0..n {
                kernel[(r, c)] = eig.vectors[(r, c)];
            }
        }
        Ok(Self { map: map.clone(), gram_inv, kernel })
    }

    pub fn kernel_dim(&self) -> usize {
        self.kernel.cols()
    }

    /// Minimum-norm `x` with `P x = z`.
    pub fn particular(&self, z: &[S]) -> Vec<S> {
        self.map.tr_mul_vec(&self.gram_inv.mul_vec(z))
    }

    /// `x_p(z) + N w`
    pub fn point(&self, z: &[S], w: &[S]) -> Vec<S> {
        let mut x = self.particular(z);
        axpy(S::one(), &self.kernel.mul_vec(w), &mut x);
        x
    }

    /// Operator norm of the minimum-norm right inverse.
    pub fn right_inverse_norm(&self) -> S {
        // ‖Pᵀ(PPᵀ)⁻¹‖ = 1/σ_min(P)
        let eig = self.map.mul_mat(&self.map.transpose()).symmetric_eigen();
        S::one() / eig.min().max(S::min_positive_value()).sqrt()
    }
}

pub fn dot<S: Real>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm<S: Real>(a: &[S]) -> S {
    dot(a, a).sqrt()
}

pub fn norm_inf<S: Real>(a: &[S]) -> S {
    a.iter().fold(S::zero(), |m, &x| m.max(x.abs()))
}

/// `y += a x`
pub fn axpy<S: Real>(a: S, x: &[S], y: &mut [S]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn sub<S: Real>(a: &[S], b: &[S]) -> Vec<S> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn add<S: Real>(a: &[S], b: &[S]) -> Vec<S> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

pub fn scaled<S: Real>(c: S, a: &[S]) -> Vec<S> {
    a.iter().map(|&x| c * x).collect()
}

pub fn dist<S: Real>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum::<S>().sqrt()
}
