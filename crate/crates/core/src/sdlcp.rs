//! The homogeneous model rewritten as a semidefinite linear
//! complementarity problem on `S^{n+1}`:
//!
//! ```text
//! Â(X̂) + B̂(Ŷ) = 0,   X̂ Ŷ = 0,   X̂, Ŷ ⪰ 0.
//! ```
//!
//! Rows of `Â` encode the primal equations and force the off-diagonal
//! border of `X̂` to zero. Rows of `B̂` come from a basis of the orthogonal
//! complement of `{(−b_i, svec(A_i))}`, which encodes the dual equations
//! without the free variable `y`.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dense::{self, DenseMat, RANK_TOL};
use crate::embed::HPoint;
use crate::error::{SdlcpError, ProblemError};
use crate::problem::{validate, Lsdfp, Witness};
use crate::symcore::{smat_values, svec_values, tri, SymMat};

/// Off-block magnitude above which a hat point is not block diagonal.
pub const ITERATE_FORM_TOL: f64 = 1e-8;
/// Relative tolerance of the structural checks.
pub const CHECK_TOL: f64 = 1e-10;

const B122_RETRIES: usize = 20;

/// `[d_1; svec(B_1)]` together with an orthonormal basis `B_2, …` of the
/// null space of `𝒜`; these span the complement of `{[−b_i; svec(A_i)]}`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthBasis {
    pub d1: f64,
    pub b1: SymMat,
    pub bs: Vec<SymMat>,
}

impl OrthBasis {
    pub fn len(&self) -> usize {
        1 + self.bs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Frobenius norm of `[d 𝓑] [−bᵀ; 𝒜ᵀ]`.
    pub fn orthogonality_defect(&self, p: &Lsdfp) -> f64 {
        let mut sq = 0.0;
        for (ai, &bi) in p.a().iter().zip(p.b()) {
            let e = self.b1.dot(ai) - self.d1 * bi;
            sq += e * e;
            for bj in &self.bs {
                let e = bj.dot(ai);
                sq += e * e;
            }
        }
        libm::sqrt(sq)
    }

    /// Rank of the stacked `[d_j; svec(B_j)]` vectors.
    pub fn rank(&self) -> usize {
        let nt = tri(self.b1.n());
        let mut data = Vec::with_capacity(self.len() * (nt + 1));
        data.push(self.d1);
        data.extend(svec_values(&self.b1));
        for bj in &self.bs {
            data.push(0.0);
            data.extend(svec_values(bj));
        }
        let m = DenseMat::from_row_major(self.len(), nt + 1, data).expect("consistent shape");
        dense::rank(&m, RANK_TOL)
    }
}

/// `d_1 = 1`, `B_1` the least-norm solution of `𝒜 svec(B_1) = b`, and
/// `B_2, …` an orthonormal null-space basis of `𝒜`.
pub fn build_orth_basis(p: &Lsdfp) -> Result<OrthBasis, SdlcpError> {
    validate(p).into_result()?;
    let amat = p.constraint_matrix();
    let b1 = dense::least_norm_solve(&amat, p.b(), RANK_TOL).map_err(ProblemError::from)?;
    let n = p.n();
    let bs = dense::null_space(&amat, RANK_TOL)
        .iter()
        .map(|v| smat_values(n, v))
        .collect();
    Ok(OrthBasis {
        d1: 1.0,
        b1: smat_values(n, &b1),
        bs,
    })
}

/// Matrix `E^{i,j}` with `1/2` at `(i, j)` and `(j, i)`.
fn half_unit(n: usize, i: usize, j: usize) -> SymMat {
    let mut e = SymMat::zeros(n);
    e.set(i, j, 0.5);
    e
}

/// Rows of `Â` and `B̂` as symmetric matrices of order `n + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SdlcpOps {
    n: usize,
    m: usize,
    rows_a: Vec<SymMat>,
    rows_b: Vec<SymMat>,
}

impl SdlcpOps {
    pub fn new(p: &Lsdfp, basis: &OrthBasis) -> Self {
        let (n, m) = (p.n(), p.m());
        let n1 = n + 1;
        let nt1 = tri(n1);
        let mut rows_a = Vec::with_capacity(nt1);
        for (ai, &bi) in p.a().iter().zip(p.b()) {
            rows_a.push(ai.bordered(-bi));
        }
        for i in 0..n {
            rows_a.push(half_unit(n1, i, n));
        }
        let mut rows_b = vec![SymMat::zeros(n1); m + n];
        rows_b.push(basis.b1.bordered(basis.d1));
        for bj in &basis.bs {
            rows_b.push(bj.bordered(0.0));
        }
        rows_a.resize(nt1, SymMat::zeros(n1));
        debug_assert_eq!(rows_b.len(), nt1);
        Self { n, m, rows_a, rows_b }
    }

    /// Validates the problem, builds the basis and the operators.
    pub fn build(p: &Lsdfp) -> Result<(OrthBasis, Self), SdlcpError> {
        let basis = build_orth_basis(p)?;
        let ops = Self::new(p, &basis);
        Ok((basis, ops))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n1(&self) -> usize {
        self.n + 1
    }

    /// `ñ₁ = (n+1)(n+2)/2`, the number of rows.
    pub fn rows(&self) -> usize {
        self.rows_a.len()
    }

    pub fn rows_a(&self) -> &[SymMat] {
        &self.rows_a
    }

    pub fn rows_b(&self) -> &[SymMat] {
        &self.rows_b
    }

    /// Index of the row carrying `(B_1, d_1)`.
    pub fn b1_row(&self) -> usize {
        self.m + self.n
    }

    pub fn apply_a(&self, xh: &SymMat) -> Vec<f64> {
        assert_eq!(xh.n(), self.n1(), "dimension mismatch");
        self.rows_a.iter().map(|r| r.dot(xh)).collect()
    }

    pub fn apply_b(&self, yh: &SymMat) -> Vec<f64> {
        assert_eq!(yh.n(), self.n1(), "dimension mismatch");
        self.rows_b.iter().map(|r| r.dot(yh)).collect()
    }

    /// `Â(X̂) + B̂(Ŷ)`
    pub fn residual(&self, hp: &HatPoint) -> Vec<f64> {
        self.apply_a(&hp.xh)
            .iter()
            .zip(self.apply_b(&hp.yh))
            .map(|(a, b)| a + b)
            .collect()
    }

    /// `ñ₁ x ñ₁` matrix whose rows are `svec` of the `Â` rows.
    pub fn a_matrix(&self) -> DenseMat {
        rows_to_matrix(&self.rows_a)
    }

    pub fn b_matrix(&self) -> DenseMat {
        rows_to_matrix(&self.rows_b)
    }

    /// Adds `magnitude · I` to one `B̂` row, a negative control for the
    /// equivalence check. Picks the first row after `(B_1, d_1)` if there is
    /// one.
    pub fn inject_fault(&mut self, magnitude: f64) {
        let row = (self.b1_row() + 1).min(self.rows() - 1);
        let n1 = self.n1();
        self.rows_b[row] = self.rows_b[row].axpy(magnitude, &SymMat::identity(n1));
    }
}

fn rows_to_matrix(rows: &[SymMat]) -> DenseMat {
    let cols = tri(rows[0].n());
    let mut data = Vec::with_capacity(rows.len() * cols);
    for r in rows {
        data.extend(svec_values(r));
    }
    DenseMat::from_row_major(rows.len(), cols, data).expect("consistent shape")
}

/// Pair `(X̂, Ŷ)` in `S^{n+1} x S^{n+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HatPoint {
    pub xh: SymMat,
    pub yh: SymMat,
}

impl HatPoint {
    /// `Tr(X̂Ŷ) / (n + 1)`
    pub fn mu(&self) -> f64 {
        self.xh.dot(&self.yh) / self.xh.n() as f64
    }

    /// `X̂_{n+1,n+1}`, the `τ` coordinate.
    pub fn tau(&self) -> f64 {
        let k = self.xh.n() - 1;
        self.xh.get(k, k)
    }

    pub fn kappa(&self) -> f64 {
        let k = self.yh.n() - 1;
        self.yh.get(k, k)
    }
}

/// `X̂ = blkdiag(X, τ)`, `Ŷ = blkdiag(Y, κ)`.
pub fn embed(pt: &HPoint) -> HatPoint {
    HatPoint {
        xh: pt.x.bordered(pt.tau),
        yh: pt.z.bordered(pt.kappa),
    }
}

/// Blocks of a hat point.
#[derive(Debug, Clone, PartialEq)]
pub struct Extracted {
    pub x: SymMat,
    pub z: SymMat,
    pub tau: f64,
    pub kappa: f64,
}

fn leading_block(m: &SymMat) -> SymMat {
    let idx: Vec<usize> = (0..m.n() - 1).collect();
    m.principal(&idx)
}

fn border_norm(m: &SymMat) -> f64 {
    let k = m.n() - 1;
    let mut sq = 0.0;
    for i in 0..k {
        sq += m.get(i, k) * m.get(i, k);
    }
    libm::sqrt(sq)
}

/// Inverse of [`embed`] for block-diagonal `X̂`; `Ŷ`'s border is ignored.
pub fn extract(hp: &HatPoint) -> Result<Extracted, SdlcpError> {
    let off = border_norm(&hp.xh);
    if !(off <= ITERATE_FORM_TOL) {
        return Err(SdlcpError::NotIterateForm { off_block: off });
    }
    Ok(Extracted {
        x: leading_block(&hp.xh),
        z: leading_block(&hp.yh),
        tau: hp.tau(),
        kappa: hp.kappa(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub trials: usize,
    /// Largest `|Tr(X̂Ŷ)| / (‖X̂‖_F ‖Ŷ‖_F)` over sampled solutions.
    pub max_rel_trace: f64,
    /// Smallest relative `Tr(X̂Ŷ)` (monotonicity needs it `≥ −tol`).
    pub min_rel_trace: f64,
    pub zero_is_solution: bool,
    pub rank: usize,
    pub rows: usize,
}

impl MonotonicityReport {
    pub fn monotone(&self) -> bool {
        self.min_rel_trace >= -CHECK_TOL
    }

    pub fn trace_vanishes(&self) -> bool {
        self.max_rel_trace <= CHECK_TOL
    }

    pub fn surjective(&self) -> bool {
        self.rank == self.rows
    }

    pub fn passed(&self) -> bool {
        self.monotone() && self.zero_is_solution && self.surjective()
    }
}

/// Samples `trials` random solutions of `Â(X̂) + B̂(Ŷ) = 0` and records
/// `Tr(X̂Ŷ)`; also checks that `(0, 0)` solves the system and that
/// `[Â B̂]` has full row rank.
pub fn check_monotone_surjective(ops: &SdlcpOps, trials: usize, seed: u64) -> MonotonicityReport {
    let nt1 = ops.rows();
    let am = ops.a_matrix();
    let bm = ops.b_matrix();
    let mut joint = DenseMat::zeros(nt1, 2 * nt1);
    for i in 0..nt1 {
        for j in 0..nt1 {
            joint.set(i, j, am.get(i, j));
            joint.set(i, nt1 + j, bm.get(i, j));
        }
    }
    let rank = dense::rank(&joint, RANK_TOL);
    let kernel = dense::null_space(&joint, RANK_TOL);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n1 = ops.n1();
    let mut max_rel: f64 = 0.0;
    let mut min_rel: f64 = 0.0;
    for _ in 0..trials {
        let mut v = vec![0.0; 2 * nt1];
        for k in &kernel {
            let c: f64 = rng.gen_range(-1.0..1.0);
            for (vi, ki) in v.iter_mut().zip(k) {
                *vi += c * ki;
            }
        }
        let xh = smat_values(n1, &v[..nt1]);
        let yh = smat_values(n1, &v[nt1..]);
        let scale = xh.frobenius_norm() * yh.frobenius_norm();
        if scale == 0.0 {
            continue;
        }
        let t = xh.dot(&yh) / scale;
        max_rel = max_rel.max(t.abs());
        min_rel = min_rel.min(t);
    }
    let zero = HatPoint {
        xh: SymMat::zeros(n1),
        yh: SymMat::zeros(n1),
    };
    let zero_is_solution = ops.residual(&zero).iter().all(|&v| v == 0.0);
    MonotonicityReport {
        trials,
        max_rel_trace: max_rel,
        min_rel_trace: min_rel,
        zero_is_solution,
        rank,
        rows: nt1,
    }
}

/// True when every entry of `B̂(Ŷ₀)` except the `(B_1, d_1)` row is at most
/// `1e-10 ‖Ŷ₀‖_F` in magnitude. This holds for embedded dual feasible
/// starts, which is the condition under which the superlinear rate is
/// established.
pub fn check_warm_start_condition(ops: &SdlcpOps, yhat0: &SymMat) -> bool {
    let tol = CHECK_TOL * yhat0.frobenius_norm();
    let skip = ops.b1_row();
    ops.apply_b(yhat0)
        .iter()
        .enumerate()
        .all(|(k, v)| k == skip || v.abs() <= tol)
}

/// Result of checking `(B_1)_{22} ≠ 0` in the witness partition.
#[derive(Debug, Clone, PartialEq)]
pub struct B122Check {
    /// Frobenius norm of the block for the original `B_1`.
    pub norm: f64,
    pub original_ok: bool,
    /// Replacement basis when the original failed.
    pub adjusted: Option<OrthBasis>,
}

impl B122Check {
    pub fn passed(&self) -> bool {
        self.original_ok || self.adjusted.is_some()
    }
}

/// Norm of the block of `QᵀB_1Q` on the kernel of `X*`.
pub fn b122_norm(b1: &SymMat, w: &Witness) -> f64 {
    let n = b1.n();
    let idx: Vec<usize> = (w.partition_rank..n).collect();
    if idx.is_empty() {
        return f64::INFINITY;
    }
    b1.rotate(&w.q).principal(&idx).frobenius_norm()
}

/// Checks `(B_1)_{22} ≠ 0`. On failure tries `B_1 + Σ c_j B_j` with small
/// random `c`, which keeps every basis invariant.
pub fn check_b1_22(basis: &OrthBasis, w: &Witness, seed: u64) -> Result<B122Check, SdlcpError> {
    let norm = b122_norm(&basis.b1, w);
    if norm > CHECK_TOL {
        return Ok(B122Check {
            norm,
            original_ok: true,
            adjusted: None,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 0.1 * basis.b1.frobenius_norm().max(1.0);
    for _ in 0..B122_RETRIES {
        if basis.bs.is_empty() {
            break;
        }
        let mut b1 = basis.b1.clone();
        for bj in &basis.bs {
            b1 = b1.axpy(scale * rng.gen_range(-1.0..1.0), bj);
        }
        if b122_norm(&b1, w) > CHECK_TOL {
            return Ok(B122Check {
                norm,
                original_ok: false,
                adjusted: Some(OrthBasis {
                    d1: basis.d1,
                    b1,
                    bs: basis.bs.clone(),
                }),
            });
        }
    }
    Err(SdlcpError::CannotSatisfyB122 {
        attempts: B122_RETRIES,
    })
}

/// Both directions of the solution correspondence on a witness.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceReport {
    /// `‖Â(X̂*) + B̂(Ŷ*)‖` for the embedded witness.
    pub forward_residual: f64,
    /// `|Tr(X̂*Ŷ*)|`
    pub forward_complementarity: f64,
    /// Largest homogeneous-model residual of the point extracted from the
    /// hat solution, with `y` recovered from `Y`.
    pub backward_residual: f64,
    pub scale: f64,
}

impl CorrespondenceReport {
    pub fn passed(&self) -> bool {
        let tol = CHECK_TOL * self.scale;
        self.forward_residual <= tol
            && self.forward_complementarity <= tol
            && self.backward_residual <= tol
    }
}

pub fn check_solution_correspondence(
    p: &Lsdfp,
    ops: &SdlcpOps,
    w: &Witness,
) -> Result<CorrespondenceReport, SdlcpError> {
    let pt = HPoint {
        x: w.x_star.clone(),
        y: w.y_star.clone(),
        z: w.z_star.clone(),
        tau: 1.0,
        kappa: 0.0,
    };
    let hp = embed(&pt);
    let forward_residual = dense::norm2(&ops.residual(&hp));
    let forward_complementarity = hp.xh.dot(&hp.yh).abs();

    let ex = extract(&hp)?;
    let y = p.recover_y(&ex.z)?;
    let back = HPoint {
        x: ex.x,
        y,
        z: ex.z,
        tau: ex.tau,
        kappa: ex.kappa,
    };
    let res = crate::embed::residuals(p, &back);
    let backward_residual = res
        .norm_r()
        .max(res.norm_s())
        .max(res.gamma.abs())
        .max((back.x.dot(&back.z) + back.tau * back.kappa).abs());
    let scale = p.scale() * (1.0 + w.x_star.frobenius_norm()) * (1.0 + w.z_star.frobenius_norm());
    Ok(CorrespondenceReport {
        forward_residual,
        forward_complementarity,
        backward_residual,
        scale,
    })
}
