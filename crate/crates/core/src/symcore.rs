//! Dense symmetric matrices and the symmetric vectorization.
//!
//! `svec` stacks the lower triangle column by column and scales the
//! off-diagonal entries by √2, so that `Tr(XY) = svec(X)·svec(Y)`:
//!
//! ```text
//! svec(X) = (X11, √2 X21, …, √2 Xn1, X22, √2 X32, …, Xnn)
//! ```
//!
//! Eigendecompositions use cyclic Jacobi rotations, which keep small
//! eigenvalues accurate relative to their size for the positive definite
//! iterates an interior point method produces.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::SQRT_2;

use crate::dense::{self, DenseMat};
use crate::error::LinalgError;

const JACOBI_MAX_SWEEPS: usize = 100;

/// `n (n + 1) / 2`
#[inline]
pub const fn tri(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Inverse of [`tri`]; `None` when `len` is not triangular.
pub fn tri_inverse(len: usize) -> Option<usize> {
    let mut n = 0;
    while tri(n) < len {
        n += 1;
    }
    (tri(n) == len).then_some(n)
}

/// Dense symmetric `n x n` matrix, stored in full row-major form with
/// `a[i][j] == a[j][i]` bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMat {
    n: usize,
    data: Vec<f64>,
}

impl SymMat {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![1.0; n])
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = Self::zeros(n);
        for (i, &v) in d.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    /// Builds from the lower triangle (`f(i, j)` is called with `i >= j`).
    pub fn from_lower_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for j in 0..n {
            for i in j..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Accepts a row-major `n x n` array. Entries are symmetrized by
    /// averaging; asymmetry above `1e-12` relative to the largest entry is
    /// rejected.
    pub fn from_row_major(n: usize, data: &[f64]) -> Result<Self, LinalgError> {
        if data.len() != n * n {
            return Err(LinalgError::DimensionMismatch {
                expected: n * n,
                found: data.len(),
            });
        }
        let scale = data.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut asym = 0.0f64;
        for i in 0..n {
            for j in 0..i {
                asym = asym.max((data[i * n + j] - data[j * n + i]).abs());
            }
        }
        if asym > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(LinalgError::NotSymmetric { asymmetry: asym });
        }
        Ok(Self::from_lower_fn(n, |i, j| {
            if i == j {
                data[i * n + i]
            } else {
                0.5 * (data[i * n + j] + data[j * n + i])
            }
        }))
    }

    /// Symmetric part `(M + Mᵀ)/2` of a square dense matrix.
    pub fn sym_part(m: &DenseMat) -> Self {
        assert_eq!(m.rows(), m.cols(), "sym_part needs a square matrix");
        Self::from_lower_fn(m.rows(), |i, j| {
            if i == j {
                m.get(i, i)
            } else {
                0.5 * (m.get(i, j) + m.get(j, i))
            }
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn as_row_major(&self) -> &[f64] {
        &self.data
    }

    pub fn to_dense(&self) -> DenseMat {
        DenseMat::from_row_major(self.n, self.n, self.data.clone()).expect("square storage")
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// `Tr(self * other)`
    pub fn dot(&self, other: &SymMat) -> f64 {
        assert_eq!(self.n, other.n, "dimension mismatch");
        dense::dot(&self.data, &other.data)
    }

    pub fn frobenius_norm(&self) -> f64 {
        dense::norm2(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    fn zip_with(&self, other: &SymMat, f: impl Fn(f64, f64) -> f64) -> SymMat {
        assert_eq!(self.n, other.n, "dimension mismatch");
        SymMat {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &SymMat) -> SymMat {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SymMat) -> SymMat {
        self.zip_with(other, |a, b| a - b)
    }

    /// `self + alpha * other`
    pub fn axpy(&self, alpha: f64, other: &SymMat) -> SymMat {
        self.zip_with(other, |a, b| a + alpha * b)
    }

    pub fn scale(&self, alpha: f64) -> SymMat {
        SymMat {
            n: self.n,
            data: self.data.iter().map(|v| alpha * v).collect(),
        }
    }

    /// `self + alpha I`
    pub fn shift(&self, alpha: f64) -> SymMat {
        let mut out = self.clone();
        for i in 0..self.n {
            out.data[i * self.n + i] += alpha;
        }
        out
    }

    /// General (nonsymmetric) product `self * other`.
    pub fn mul(&self, other: &SymMat) -> DenseMat {
        self.to_dense().matmul(&other.to_dense())
    }

    /// `S M S` for symmetric `S` (this matrix) and `M`.
    pub fn congruence(&self, m: &SymMat) -> SymMat {
        let s = self.to_dense();
        Self::sym_part(&s.matmul(&m.to_dense()).matmul(&s))
    }

    /// `Qᵀ self Q`
    pub fn rotate(&self, q: &DenseMat) -> SymMat {
        Self::sym_part(&q.transpose().matmul(&self.to_dense()).matmul(q))
    }

    /// Block-diagonal extension `[[self, 0], [0, corner]]` of size `n + 1`.
    pub fn bordered(&self, corner: f64) -> SymMat {
        let n1 = self.n + 1;
        let mut out = SymMat::zeros(n1);
        for i in 0..self.n {
            for j in 0..self.n {
                out.data[i * n1 + j] = self.data[i * self.n + j];
            }
        }
        out.data[n1 * n1 - 1] = corner;
        out
    }

    /// Principal submatrix on the index set `idx`.
    pub fn principal(&self, idx: &[usize]) -> SymMat {
        let k = idx.len();
        let mut out = SymMat::zeros(k);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                out.data[a * k + b] = self.get(i, j);
            }
        }
        out
    }

    pub fn eigen(&self) -> SymEigen {
        jacobi_eigen(self)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(self)
    }

    pub fn is_positive_definite(&self) -> bool {
        self.n > 0 && min_eigenvalue(self) > 0.0
    }
}

/// Symmetric vectorization of a matrix of order `n`.
///
/// The lower triangle is kept unscaled so that `smat(svec(X)) == X` holds
/// bit for bit; multiplying by `√2` and dividing again does not round-trip
/// in floating point. [`SVec::values`] applies the `√2` scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct SVec {
    n: usize,
    /// Column-major lower triangle, unscaled.
    lower: Vec<f64>,
}

impl SVec {
    /// From `√2`-scaled values; fails unless the length is a triangular
    /// number.
    pub fn new(values: Vec<f64>) -> Result<Self, LinalgError> {
        let n = tri_inverse(values.len()).ok_or(LinalgError::NotTriangular { len: values.len() })?;
        let mut lower = values;
        for_offdiag(n, |k| lower[k] /= SQRT_2);
        Ok(Self { n, lower })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Column-major lower triangle with off-diagonals scaled by `√2`.
    pub fn values(&self) -> Vec<f64> {
        let mut v = self.lower.clone();
        for_offdiag(self.n, |k| v[k] *= SQRT_2);
        v
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values()
    }

    /// `Tr(XY)` for `X = smat(self)`, `Y = smat(other)`.
    pub fn dot(&self, other: &SVec) -> f64 {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let (mut diag, mut off) = (0.0, 0.0);
        let mut k = 0;
        for j in 0..self.n {
            diag += self.lower[k] * other.lower[k];
            k += 1;
            for _ in j + 1..self.n {
                off += self.lower[k] * other.lower[k];
                k += 1;
            }
        }
        diag + 2.0 * off
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.dot(self).max(0.0))
    }
}

/// Calls `f` with the position of every off-diagonal entry of a column-major
/// lower triangle of order `n`.
fn for_offdiag(n: usize, mut f: impl FnMut(usize)) {
    let mut k = 0;
    for j in 0..n {
        k += 1;
        for _ in j + 1..n {
            f(k);
            k += 1;
        }
    }
}

pub fn svec(x: &SymMat) -> SVec {
    let mut lower = Vec::with_capacity(tri(x.n));
    for j in 0..x.n {
        for i in j..x.n {
            lower.push(x.get(i, j));
        }
    }
    SVec { n: x.n, lower }
}

pub(crate) fn svec_values(x: &SymMat) -> Vec<f64> {
    let n = x.n;
    let mut v = Vec::with_capacity(tri(n));
    for j in 0..n {
        v.push(x.get(j, j));
        for i in j + 1..n {
            v.push(SQRT_2 * x.get(i, j));
        }
    }
    v
}

pub fn smat(v: &SVec) -> SymMat {
    let mut m = SymMat::zeros(v.n);
    let mut k = 0;
    for j in 0..v.n {
        for i in j..v.n {
            m.set(i, j, v.lower[k]);
            k += 1;
        }
    }
    m
}

pub(crate) fn smat_values(n: usize, v: &[f64]) -> SymMat {
    debug_assert_eq!(v.len(), tri(n));
    let mut m = SymMat::zeros(n);
    let mut k = 0;
    for j in 0..n {
        m.set(j, j, v[k]);
        k += 1;
        for i in j + 1..n {
            m.set(i, j, v[k] / SQRT_2);
            k += 1;
        }
    }
    m
}

/// `smat` from a raw slice; errors when the length is not triangular.
pub fn smat_from_slice(v: &[f64]) -> Result<SymMat, LinalgError> {
    let n = tri_inverse(v.len()).ok_or(LinalgError::NotTriangular { len: v.len() })?;
    Ok(smat_values(n, v))
}

/// Matrix whose `svec` is the `k`-th unit vector.
pub(crate) fn svec_basis(n: usize, k: usize) -> SymMat {
    let mut e = vec![0.0; tri(n)];
    e[k] = 1.0;
    smat_values(n, &e)
}

/// Eigenvalues in ascending order with matching eigenvector columns.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: DenseMat,
}

impl SymEigen {
    /// `Q diag(f(λ)) Qᵀ`
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> SymMat {
        let n = self.values.len();
        let fl: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        SymMat::from_lower_fn(n, |i, j| {
            (0..n)
                .map(|k| self.vectors.get(i, k) * fl[k] * self.vectors.get(j, k))
                .sum()
        })
    }
}

fn jacobi_eigen(x: &SymMat) -> SymEigen {
    let n = x.n;
    let mut a = x.data.clone();
    let mut v = DenseMat::identity(n);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                // negligible against both diagonal entries: leave it
                if apq.abs() <= f64::EPSILON * 0.5 * libm::sqrt(app.abs() * aqq.abs()) {
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + libm::sqrt(1.0 + theta * theta));
                let t = if theta.is_finite() { t } else { 0.0 };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = DenseMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors.set(k, dst, v.get(k, src));
        }
    }
    SymEigen { values, vectors }
}

pub fn min_eigenvalue(x: &SymMat) -> f64 {
    jacobi_eigen(x).values.first().copied().unwrap_or(f64::NAN)
}

pub fn max_eigenvalue(x: &SymMat) -> f64 {
    jacobi_eigen(x).values.last().copied().unwrap_or(f64::NAN)
}

/// Default positive-definiteness threshold `1e-12 (1 + ‖Y‖_F)`.
pub fn pd_tolerance(y: &SymMat) -> f64 {
    1e-12 * (1.0 + y.frobenius_norm())
}

/// Square root of a positive definite matrix together with its inverse.
#[derive(Debug, Clone)]
pub struct PsdSqrt {
    pub sqrt: SymMat,
    pub inv_sqrt: SymMat,
    pub min_eigenvalue: f64,
}

/// `Y^{1/2}` with the default tolerance.
pub fn psd_sqrt(y: &SymMat) -> Result<PsdSqrt, LinalgError> {
    psd_sqrt_tol(y, pd_tolerance(y))
}

/// `Y^{1/2}` requiring `λ_min(Y) > tol`.
pub fn psd_sqrt_tol(y: &SymMat, tol: f64) -> Result<PsdSqrt, LinalgError> {
    let eig = jacobi_eigen(y);
    let lmin = eig.values.first().copied().unwrap_or(f64::NAN);
    if !(lmin > tol) {
        return Err(LinalgError::NotPositiveDefinite {
            min_eigenvalue: lmin,
            tolerance: tol,
        });
    }
    Ok(PsdSqrt {
        sqrt: eig.reconstruct_with(libm::sqrt),
        inv_sqrt: eig.reconstruct_with(|l| 1.0 / libm::sqrt(l)),
        min_eigenvalue: lmin,
    })
}

/// Inverse of a positive definite matrix through its eigendecomposition.
pub fn pd_inverse(y: &SymMat) -> Result<SymMat, LinalgError> {
    let eig = jacobi_eigen(y);
    let lmin = eig.values.first().copied().unwrap_or(f64::NAN);
    if !(lmin > 0.0) {
        return Err(LinalgError::NotPositiveDefinite {
            min_eigenvalue: lmin,
            tolerance: 0.0,
        });
    }
    Ok(eig.reconstruct_with(|l| 1.0 / l))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svec_identity() {
        assert_eq!(svec(&SymMat::identity(2)).values(), &[1.0, 0.0, 1.0]);
    }

    #[test]
    fn svec_scales_off_diagonal() {
        let x = SymMat::from_row_major(2, &[1.0, 2.0, 2.0, 3.0]).unwrap();
        let v = svec(&x);
        assert_eq!(v.values(), &[1.0, 2.0 * SQRT_2, 3.0]);
    }

    #[test]
    fn svec_ordering_is_column_major_lower() {
        let x = SymMat::from_lower_fn(3, |i, j| (10 * i + j) as f64);
        let v = svec(&x);
        let r2 = SQRT_2;
        let expect = [0.0, r2 * 10.0, r2 * 20.0, 11.0, r2 * 21.0, 22.0];
        assert_eq!(v.values(), &expect);
    }

    #[test]
    fn smat_identity_and_zero() {
        let v = SVec::new(vec![1.0, 0.0, 1.0]).unwrap();
        assert_eq!(smat(&v), SymMat::identity(2));
        let z = SVec::new(vec![0.0; 10]).unwrap();
        assert_eq!(smat(&z), SymMat::zeros(4));
    }

    #[test]
    fn smat_rejects_non_triangular() {
        assert_eq!(
            SVec::new(vec![1.0, 2.0]),
            Err(LinalgError::NotTriangular { len: 2 })
        );
        assert!(smat_from_slice(&[0.0; 4]).is_err());
    }

    #[test]
    fn asymmetric_input_rejected() {
        let err = SymMat::from_row_major(2, &[1.0, 2.0, 2.5, 1.0]).unwrap_err();
        assert!(matches!(err, LinalgError::NotSymmetric { .. }));
    }

    #[test]
    fn psd_sqrt_diagonal_and_identity() {
        let s = psd_sqrt(&SymMat::identity(3)).unwrap();
        assert!(s.sqrt.sub(&SymMat::identity(3)).max_abs() < 1e-15);
        let s = psd_sqrt(&SymMat::from_diag(&[4.0, 9.0])).unwrap();
        assert!((s.sqrt.get(0, 0) - 2.0).abs() < 1e-15);
        assert!((s.sqrt.get(1, 1) - 3.0).abs() < 1e-15);
        assert_eq!(s.sqrt.get(0, 1), 0.0);
        assert!((s.inv_sqrt.get(1, 1) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn psd_sqrt_rejects_indefinite() {
        let err = psd_sqrt(&SymMat::from_diag(&[1.0, -1e-3])).unwrap_err();
        assert!(matches!(err, LinalgError::NotPositiveDefinite { .. }));
        let err = psd_sqrt(&SymMat::from_diag(&[1.0, 1e-14])).unwrap_err();
        assert!(matches!(err, LinalgError::NotPositiveDefinite { .. }));
    }

    #[test]
    fn min_eigenvalue_simple() {
        assert_eq!(min_eigenvalue(&SymMat::identity(4)), 1.0);
        assert_eq!(min_eigenvalue(&SymMat::from_diag(&[-3.0, 5.0])), -3.0);
    }

    #[test]
    fn jacobi_reconstructs() {
        let x = SymMat::from_lower_fn(5, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        let e = x.eigen();
        let back = e.reconstruct_with(|l| l);
        assert!(back.sub(&x).frobenius_norm() < 1e-14);
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }
}
