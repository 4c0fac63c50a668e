//! Small dense linear algebra: general matrices, LU with partial pivoting,
//! and Householder QR with column pivoting (rank, null spaces, least-norm
//! solves).
//!
//! Everything here is sized for desk-scale problems (a few hundred rows at
//! most) and is written for determinism rather than speed.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::LinalgError;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix whose rows are the given slices.
    pub fn from_rows(rows: &[Vec<f64>], cols: usize) -> Result<Self, LinalgError> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(LinalgError::DimensionMismatch {
                    expected: cols,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
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
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matmul(&self, other: &DenseMat) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "matvec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    fn zip_with(&self, other: &DenseMat, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "dimension mismatch");
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn add(&self, other: &DenseMat) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &DenseMat) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| alpha * v).collect(),
        }
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm with scaling against overflow.
pub fn norm2(v: &[f64]) -> f64 {
    let scale = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let ss: f64 = v.iter().map(|x| (x / scale) * (x / scale)).sum();
    scale * libm::sqrt(ss)
}

/// LU factorization `P A = L U` with partial (row) pivoting.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
    cond_estimate: f64,
}

impl Lu {
    /// Factors a square matrix. A vanishing pivot reports `Singular` together
    /// with a crude condition estimate (ratio of extreme pivots seen so far).
    pub fn factor(a: &DenseMat) -> Result<Self, LinalgError> {
        if a.rows != a.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: a.rows,
                found: a.cols,
            });
        }
        let n = a.rows;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.max_abs();
        let mut max_pivot = 0.0f64;
        let mut min_pivot = f64::INFINITY;
        for k in 0..n {
            let mut p = k;
            let mut best = lu[k * n + k].abs();
            for i in k + 1..n {
                let v = lu[i * n + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() || best <= f64::MIN_POSITIVE * scale.max(1.0) {
                let cond = if best > 0.0 { max_pivot / best } else { f64::INFINITY };
                return Err(LinalgError::Singular {
                    pivot: k,
                    cond_estimate: cond,
                });
            }
            max_pivot = max_pivot.max(best);
            min_pivot = min_pivot.min(best);
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / pivot;
                lu[i * n + k] = f;
                if f == 0.0 {
                    continue;
                }
                for j in k + 1..n {
                    lu[i * n + j] -= f * lu[k * n + j];
                }
            }
        }
        let cond_estimate = max_pivot / min_pivot;
        Ok(Self {
            n,
            lu,
            perm,
            cond_estimate,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Ratio of the largest to the smallest pivot.
    pub fn cond_estimate(&self) -> f64 {
        self.cond_estimate
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n, "rhs length mismatch");
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        x
    }
}

/// Solves `A x = b` by LU followed by one step of iterative refinement.
pub fn solve_refined(a: &DenseMat, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let lu = Lu::factor(a)?;
    let mut x = lu.solve(b);
    let ax = a.matvec(&x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let dx = lu.solve(&r);
    for (xi, di) in x.iter_mut().zip(&dx) {
        *xi += di;
    }
    Ok(x)
}

/// Householder QR with column pivoting: `A P = Q R`.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    rows: usize,
    cols: usize,
    /// Packed reflectors below the diagonal, R on and above it.
    qr: Vec<f64>,
    betas: Vec<f64>,
    perm: Vec<usize>,
}

impl PivotedQr {
    pub fn factor(a: &DenseMat) -> Self {
        let (rows, cols) = (a.rows, a.cols);
        let mut qr = a.data.clone();
        let mut perm: Vec<usize> = (0..cols).collect();
        let steps = rows.min(cols);
        let mut betas = vec![0.0; steps];
        let mut col_norms: Vec<f64> = (0..cols)
            .map(|j| {
                let c: Vec<f64> = (0..rows).map(|i| qr[i * cols + j]).collect();
                norm2(&c)
            })
            .collect();

        for k in 0..steps {
            // pivot: column with largest remaining norm (recomputed exactly,
            // the matrices here are small)
            let mut p = k;
            let mut best = -1.0;
            for j in k..cols {
                let c: Vec<f64> = (k..rows).map(|i| qr[i * cols + j]).collect();
                col_norms[j] = norm2(&c);
                if col_norms[j] > best {
                    best = col_norms[j];
                    p = j;
                }
            }
            if p != k {
                for i in 0..rows {
                    qr.swap(i * cols + k, i * cols + p);
                }
                perm.swap(k, p);
                col_norms.swap(k, p);
            }

            let x: Vec<f64> = (k..rows).map(|i| qr[i * cols + k]).collect();
            let alpha = norm2(&x);
            if alpha == 0.0 {
                betas[k] = 0.0;
                continue;
            }
            let x0 = x[0];
            let r_kk = if x0 >= 0.0 { -alpha } else { alpha };
            // v = x - r_kk e1, normalized so v[0] = 1
            let v0 = x0 - r_kk;
            for i in k + 1..rows {
                qr[i * cols + k] /= v0;
            }
            let beta = -v0 / r_kk;
            betas[k] = beta;
            qr[k * cols + k] = r_kk;

            for j in k + 1..cols {
                let mut s = qr[k * cols + j];
                for i in k + 1..rows {
                    s += qr[i * cols + k] * qr[i * cols + j];
                }
                s *= beta;
                qr[k * cols + j] -= s;
                for i in k + 1..rows {
                    qr[i * cols + j] -= s * qr[i * cols + k];
                }
            }
        }
        Self {
            rows,
            cols,
            qr,
            betas,
            perm,
        }
    }

    pub fn r_diag(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols))
            .map(|k| self.qr[k * self.cols + k])
            .collect()
    }

    /// Numerical rank: count of `|R_kk| > rel_tol * |R_00|`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let d = self.r_diag();
        let lead = d.first().map(|v| v.abs()).unwrap_or(0.0);
        if lead == 0.0 {
            return 0;
        }
        d.iter().take_while(|v| v.abs() > rel_tol * lead).count()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Upper-triangular `R` entry (row i, column j of the permuted matrix).
    pub fn r(&self, i: usize, j: usize) -> f64 {
        if j < i {
            0.0
        } else {
            self.qr[i * self.cols + j]
        }
    }

    /// Applies `Q` to a vector of length `rows`.
    pub fn apply_q(&self, x: &mut [f64]) {
        let cols = self.cols;
        for k in (0..self.betas.len()).rev() {
            let beta = self.betas[k];
            if beta == 0.0 {
                continue;
            }
            let mut s = x[k];
            for i in k + 1..self.rows {
                s += self.qr[i * cols + k] * x[i];
            }
            s *= beta;
            x[k] -= s;
            for i in k + 1..self.rows {
                x[i] -= s * self.qr[i * cols + k];
            }
        }
    }

    /// The full orthogonal factor as a `rows x rows` matrix.
    pub fn q_full(&self) -> DenseMat {
        let n = self.rows;
        let mut q = DenseMat::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            self.apply_q(&mut e);
            for i in 0..n {
                q.set(i, j, e[i]);
            }
        }
        q
    }
}

/// Relative drop tolerance used for rank decisions.
pub const RANK_TOL: f64 = 1e-10;

/// Numerical rank of `a`.
pub fn rank(a: &DenseMat, rel_tol: f64) -> usize {
    // factor the orientation with more rows so that `min(rows, cols)` pivots
    // cover the whole rank
    if a.rows >= a.cols {
        PivotedQr::factor(a).rank(rel_tol)
    } else {
        PivotedQr::factor(&a.transpose()).rank(rel_tol)
    }
}

/// Orthonormal basis of `{x : a x = 0}`, returned as vectors.
pub fn null_space(a: &DenseMat, rel_tol: f64) -> Vec<Vec<f64>> {
    let at = a.transpose();
    let qr = PivotedQr::factor(&at);
    let r = qr.rank(rel_tol);
    let q = qr.q_full();
    (r..at.rows).map(|j| q.column(j)).collect()
}

/// Least-norm solution of the full-row-rank system `a x = b`.
pub fn least_norm_solve(a: &DenseMat, b: &[f64], rel_tol: f64) -> Result<Vec<f64>, LinalgError> {
    let (m, n) = (a.rows, a.cols);
    if b.len() != m {
        return Err(LinalgError::DimensionMismatch {
            expected: m,
            found: b.len(),
        });
    }
    // a^T P = Q R  =>  a = P R^T Q^T
    let qr = PivotedQr::factor(&a.transpose());
    let r = qr.rank(rel_tol);
    if r < m {
        return Err(LinalgError::RankDeficient { rank: r, expected: m });
    }
    // R^T z = P^T b (forward substitution)
    let pb: Vec<f64> = qr.perm().iter().map(|&p| b[p]).collect();
    let mut z = vec![0.0; n];
    for i in 0..m {
        let mut s = pb[i];
        for k in 0..i {
            s -= qr.r(k, i) * z[k];
        }
        z[i] = s / qr.r(i, i);
    }
    qr.apply_q(&mut z);
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: usize, cols: usize, v: &[f64]) -> DenseMat {
        DenseMat::from_row_major(rows, cols, v.to_vec()).unwrap()
    }

    #[test]
    fn lu_solves_small_system() {
        let a = mat(3, 3, &[0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0]);
        let x_true = [1.0, -2.0, 0.5];
        let b = a.matvec(&x_true);
        let x = solve_refined(&a, &b).unwrap();
        for (xi, ti) in x.iter().zip(&x_true) {
            assert!((xi - ti).abs() < 1e-14);
        }
    }

    #[test]
    fn lu_reports_singular() {
        let a = mat(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(Lu::factor(&a), Err(LinalgError::Singular { .. })));
    }

    #[test]
    fn rank_of_dependent_rows() {
        let a = mat(3, 3, &[1.0, 0.0, 1.0, 2.0, 0.0, 2.0, 0.0, 1.0, 0.0]);
        assert_eq!(rank(&a, RANK_TOL), 2);
        assert_eq!(rank(&a.transpose(), RANK_TOL), 2);
    }

    #[test]
    fn null_space_is_orthonormal_and_annihilated() {
        let a = mat(2, 4, &[1.0, 2.0, 0.0, -1.0, 0.0, 1.0, 1.0, 3.0]);
        let ns = null_space(&a, RANK_TOL);
        assert_eq!(ns.len(), 2);
        for (i, v) in ns.iter().enumerate() {
            for r in a.matvec(v) {
                assert!(r.abs() < 1e-13);
            }
            for (j, w) in ns.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot(v, w) - expect).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn least_norm_matches_pseudoinverse() {
        // a = (1, 0, 1), b = 1 -> x = a^T / 2
        let a = mat(1, 3, &[1.0, 0.0, 1.0]);
        let x = least_norm_solve(&a, &[1.0], RANK_TOL).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-15);
        assert!(x[1].abs() < 1e-15);
        assert!((x[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn q_full_is_orthogonal() {
        let a = mat(4, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 9.0]);
        let q = PivotedQr::factor(&a).q_full();
        let qtq = q.transpose().matmul(&q);
        let id = DenseMat::identity(4);
        for i in 0..4 {
            for j in 0..4 {
                assert!((qtq.get(i, j) - id.get(i, j)).abs() < 1e-14);
            }
        }
    }
}
