//! Feasibility problem data: `Tr(A_i X) = b_i, X ⪰ 0` and its dual
//! `Σ y_i A_i + Y = 0, Y ⪰ 0`.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dense::{self, DenseMat, PivotedQr, RANK_TOL};
use crate::error::ProblemError;
use crate::symcore::{smat_values, svec_values, tri, SymMat};

/// Retry budget used by [`generate`].
pub const DEFAULT_GENERATION_BUDGET: usize = 50;

/// Primal constraints `Tr(A_i X) = b_i` on `X ∈ S^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lsdfp {
    n: usize,
    a: Vec<SymMat>,
    b: Vec<f64>,
}

impl Lsdfp {
    /// Checks shapes only; use [`validate`] for rank and right-hand side.
    pub fn new(n: usize, a: Vec<SymMat>, b: Vec<f64>) -> Result<Self, ProblemError> {
        if n == 0 {
            return Err(ProblemError::Shape("n must be positive"));
        }
        if a.is_empty() {
            return Err(ProblemError::Shape("at least one constraint is required"));
        }
        if a.len() != b.len() {
            return Err(ProblemError::Shape("A and b have different lengths"));
        }
        if a.iter().any(|ai| ai.n() != n) {
            return Err(ProblemError::Shape("constraint matrix has wrong dimension"));
        }
        if a.len() > tri(n) {
            return Err(ProblemError::Shape("m exceeds n(n+1)/2"));
        }
        if a.iter().any(|ai| ai.as_row_major().iter().any(|v| !v.is_finite()))
            || b.iter().any(|v| !v.is_finite())
        {
            return Err(ProblemError::Shape("non-finite entry"));
        }
        Ok(Self { n, a, b })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &[SymMat] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// The `m x ñ` matrix with rows `svec(A_i)ᵀ`.
    pub fn constraint_matrix(&self) -> DenseMat {
        let nt = tri(self.n);
        let mut data = Vec::with_capacity(self.m() * nt);
        for ai in &self.a {
            data.extend(svec_values(ai));
        }
        DenseMat::from_row_major(self.m(), nt, data).expect("consistent shape")
    }

    /// `(Tr(A_1 X), …, Tr(A_m X))`
    pub fn apply_a(&self, x: &SymMat) -> Vec<f64> {
        self.a.iter().map(|ai| ai.dot(x)).collect()
    }

    /// `Σ y_i A_i`
    pub fn apply_at(&self, y: &[f64]) -> SymMat {
        let mut out = SymMat::zeros(self.n);
        for (ai, &yi) in self.a.iter().zip(y) {
            if yi != 0.0 {
                out = out.axpy(yi, ai);
            }
        }
        out
    }

    /// Least-squares `y` with `Σ y_i A_i ≈ −Y`.
    pub fn recover_y(&self, z: &SymMat) -> Result<Vec<f64>, ProblemError> {
        let m = self.m();
        let mut gram = DenseMat::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                gram.set(i, j, self.a[i].dot(&self.a[j]));
            }
        }
        let rhs: Vec<f64> = self.a.iter().map(|ai| -ai.dot(z)).collect();
        Ok(dense::solve_refined(&gram, &rhs)?)
    }

    /// A magnitude used to scale absolute tolerances.
    pub fn scale(&self) -> f64 {
        let amax = self.a.iter().map(SymMat::frobenius_norm).fold(0.0, f64::max);
        1.0f64.max(amax).max(dense::norm2(&self.b))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub m: usize,
    pub rank: usize,
    pub b_nonzero: bool,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.rank == self.m && self.b_nonzero
    }

    pub fn into_result(self) -> Result<(), ProblemError> {
        if self.rank < self.m {
            Err(ProblemError::DependentConstraints {
                rank: self.rank,
                m: self.m,
            })
        } else if !self.b_nonzero {
            Err(ProblemError::ZeroRhs)
        } else {
            Ok(())
        }
    }
}

/// Rank of the stacked `svec(A_i)` rows and whether `b ≠ 0`.
pub fn validate(p: &Lsdfp) -> ValidationReport {
    ValidationReport {
        m: p.m(),
        rank: dense::rank(&p.constraint_matrix(), RANK_TOL),
        b_nonzero: p.b.iter().any(|&v| v != 0.0),
    }
}

/// Strictly complementary solution of a generated instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    /// `X*`, rank `partition_rank`.
    pub x_star: SymMat,
    pub y_star: Vec<f64>,
    /// `Y* = −Σ y*_i A_i`.
    pub z_star: SymMat,
    pub partition_rank: usize,
    /// Eigenbasis of `X*`: the first `partition_rank` columns span its range.
    pub q: DenseMat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessDefects {
    pub primal: f64,
    pub dual: f64,
    pub complementarity: f64,
    pub b_dot_y: f64,
    pub min_eig_sum: f64,
    pub min_eig_x: f64,
    pub min_eig_z: f64,
}

impl WitnessDefects {
    /// All equations hold to `tol` (already scaled) and `X* + Y* ≻ 0`.
    pub fn holds(&self, tol: f64) -> bool {
        self.primal <= tol
            && self.dual <= tol
            && self.complementarity <= tol
            && self.b_dot_y <= tol
            && self.min_eig_sum > 0.0
            && self.min_eig_x >= -tol
            && self.min_eig_z >= -tol
    }
}

impl Witness {
    pub fn defects(&self, p: &Lsdfp) -> WitnessDefects {
        let ax = p.apply_a(&self.x_star);
        let primal = ax
            .iter()
            .zip(p.b())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let dual = p.apply_at(&self.y_star).add(&self.z_star).frobenius_norm();
        let complementarity = self.x_star.mul(&self.z_star).frobenius_norm();
        let b_dot_y = dense::dot(p.b(), &self.y_star).abs();
        WitnessDefects {
            primal,
            dual,
            complementarity,
            b_dot_y,
            min_eig_sum: self.x_star.add(&self.z_star).min_eigenvalue(),
            min_eig_x: self.x_star.min_eigenvalue(),
            min_eig_z: self.z_star.min_eigenvalue(),
        }
    }
}

/// Affine family `B_0 + Σ z_j B_j ⪰ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lmi {
    pub b0: SymMat,
    pub bs: Vec<SymMat>,
}

impl Lmi {
    pub fn evaluate(&self, z: &[f64]) -> SymMat {
        let mut out = self.b0.clone();
        for (bj, &zj) in self.bs.iter().zip(z) {
            out = out.axpy(zj, bj);
        }
        out
    }
}

/// Recovers `z` from a feasible `X = B_0 + Σ z_j B_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryMap {
    b0: SymMat,
    bs: Vec<SymMat>,
    gram: DenseMat,
}

impl RecoveryMap {
    pub fn l(&self) -> usize {
        self.bs.len()
    }

    /// Least-squares `z` minimizing `‖X − B_0 − Σ z_j B_j‖_F`.
    pub fn recover(&self, x: &SymMat) -> Vec<f64> {
        if self.bs.is_empty() {
            return Vec::new();
        }
        let diff = x.sub(&self.b0);
        let rhs: Vec<f64> = self.bs.iter().map(|bj| bj.dot(&diff)).collect();
        dense::solve_refined(&self.gram, &rhs).expect("Gram matrix of independent B_j")
    }
}

/// Encodes an LMI as constraints on `X` whose feasible set is the
/// affine family `B_0 + span{B_j}`: the `A_k` form an orthonormal basis of
/// the orthogonal complement of `span{B_j}` and `b_k = Tr(A_k B_0)`.
pub fn from_lmi(lmi: &Lmi) -> Result<(Lsdfp, RecoveryMap), ProblemError> {
    let n = lmi.b0.n();
    if n == 0 {
        return Err(ProblemError::Shape("n must be positive"));
    }
    if lmi.bs.iter().any(|bj| bj.n() != n) {
        return Err(ProblemError::Shape("LMI matrices differ in dimension"));
    }
    let nt = tri(n);
    let l = lmi.bs.len();
    let complement = if l == 0 {
        (0..nt)
            .map(|k| {
                let mut e = vec![0.0; nt];
                e[k] = 1.0;
                e
            })
            .collect::<Vec<_>>()
    } else {
        let mut data = Vec::with_capacity(l * nt);
        for bj in &lmi.bs {
            data.extend(svec_values(bj));
        }
        let bmat = DenseMat::from_row_major(l, nt, data)?;
        let rank = dense::rank(&bmat, RANK_TOL);
        if rank < l {
            return Err(ProblemError::DegenerateLmi { rank, l });
        }
        dense::null_space(&bmat, RANK_TOL)
    };
    if complement.is_empty() {
        return Err(ProblemError::ZeroRhs);
    }
    let b0v = svec_values(&lmi.b0);
    let b: Vec<f64> = complement.iter().map(|g| dense::dot(g, &b0v)).collect();
    let tol = 1e-12 * (1.0 + lmi.b0.frobenius_norm());
    if dense::norm2(&b) <= tol {
        return Err(ProblemError::ZeroRhs);
    }
    let a = complement.iter().map(|g| smat_values(n, g)).collect();
    let mut gram = DenseMat::zeros(l, l);
    for i in 0..l {
        for j in 0..l {
            gram.set(i, j, lmi.bs[i].dot(&lmi.bs[j]));
        }
    }
    Ok((
        Lsdfp::new(n, a, b)?,
        RecoveryMap {
            b0: lmi.b0.clone(),
            bs: lmi.bs.clone(),
            gram,
        },
    ))
}

fn random_sym(rng: &mut ChaCha8Rng, n: usize) -> SymMat {
    SymMat::from_lower_fn(n, |_, _| rng.gen_range(-1.0..1.0))
}

/// Orthogonal factor of the QR decomposition of a uniform random matrix.
pub fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DenseMat {
    let mut g = DenseMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            g.set(i, j, rng.gen_range(-1.0..1.0));
        }
    }
    PivotedQr::factor(&g).q_full()
}

/// `Q diag(d) Qᵀ`
fn spectral(q: &DenseMat, d: &[f64]) -> SymMat {
    let n = d.len();
    SymMat::from_lower_fn(n, |i, j| (0..n).map(|k| q.get(i, k) * d[k] * q.get(j, k)).sum())
}

/// Random instance with a strictly complementary witness and a strictly
/// feasible dual, deterministic in `seed`.
pub fn generate(n: usize, m: usize, r: usize, seed: u64) -> Result<(Lsdfp, Witness), ProblemError> {
    generate_with_budget(n, m, r, seed, DEFAULT_GENERATION_BUDGET)
}

pub fn generate_with_budget(
    n: usize,
    m: usize,
    r: usize,
    seed: u64,
    budget: usize,
) -> Result<(Lsdfp, Witness), ProblemError> {
    if n < 2 || r < 1 || r >= n {
        return Err(ProblemError::InvalidArguments("need 1 <= r <= n-1"));
    }
    if m < 2 || m > tri(n) {
        return Err(ProblemError::InvalidArguments("need 2 <= m <= n(n+1)/2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..budget {
        if let Some(found) = generate_once(&mut rng, n, m, r) {
            return Ok(found);
        }
    }
    Err(ProblemError::GenerationFailed { attempts: budget })
}

fn generate_once(rng: &mut ChaCha8Rng, n: usize, m: usize, r: usize) -> Option<(Lsdfp, Witness)> {
    let q = random_orthogonal(rng, n);
    let mut dx = vec![0.0; n];
    let mut dz = vec![0.0; n];
    for (k, (x, z)) in dx.iter_mut().zip(dz.iter_mut()).enumerate() {
        if k < r {
            *x = rng.gen_range(0.5..2.0);
        } else {
            *z = rng.gen_range(0.5..2.0);
        }
    }
    let x_star = spectral(&q, &dx);
    let z_star = spectral(&q, &dz);

    let mut y_star: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    y_star[0] = sign * rng.gen_range(0.5..1.0);

    let mut a = Vec::with_capacity(m);
    a.push(SymMat::zeros(n));
    for _ in 1..m {
        a.push(random_sym(rng, n));
    }
    let mut rest = z_star.scale(-1.0);
    for i in 1..m {
        rest = rest.axpy(-y_star[i], &a[i]);
    }
    a[0] = rest.scale(1.0 / y_star[0]);
    let b: Vec<f64> = a.iter().map(|ai| ai.dot(&x_star)).collect();
    // recompute Y* from the stored A so the dual equation holds to rounding
    let p = Lsdfp::new(n, a, b).ok()?;
    let z_star = p.apply_at(&y_star).scale(-1.0);

    if !validate(&p).is_valid() {
        return None;
    }
    crate::phase1::find_dual_interior(&p, crate::phase1::DEFAULT_MARGIN).ok()?;
    let witness = Witness {
        x_star,
        y_star,
        z_star,
        partition_rank: r,
        q,
    };
    Some((p, witness))
}

/// Instance with `A_1 = I, b_1 = −1`, so any primal solution of the
/// homogeneous model has `Tr(X) = −τ` and `τ` must vanish. The remaining
/// rows are random.
pub fn tau_collapse_instance(n: usize, m: usize, seed: u64) -> Result<Lsdfp, ProblemError> {
    if n == 0 || m == 0 || m > tri(n) {
        return Err(ProblemError::InvalidArguments("need 1 <= m <= n(n+1)/2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..DEFAULT_GENERATION_BUDGET {
        let mut a = vec![SymMat::identity(n)];
        let mut b = vec![-1.0];
        for _ in 1..m {
            a.push(random_sym(&mut rng, n));
            b.push(rng.gen_range(-1.0..1.0));
        }
        let p = Lsdfp::new(n, a, b)?;
        if validate(&p).is_valid() {
            return Ok(p);
        }
    }
    Err(ProblemError::GenerationFailed {
        attempts: DEFAULT_GENERATION_BUDGET,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_instance_is_valid() {
        let p = Lsdfp::new(2, vec![SymMat::identity(2)], vec![1.0]).unwrap();
        assert!(validate(&p).is_valid());
    }

    #[test]
    fn dependent_rows_detected() {
        let p = Lsdfp::new(
            2,
            vec![SymMat::identity(2), SymMat::identity(2).scale(2.0)],
            vec![1.0, 2.0],
        )
        .unwrap();
        let rep = validate(&p);
        assert_eq!(rep.rank, 1);
        assert!(!rep.is_valid());
        assert_eq!(
            rep.into_result(),
            Err(ProblemError::DependentConstraints { rank: 1, m: 2 })
        );
    }

    #[test]
    fn zero_rhs_detected() {
        let mut e12 = SymMat::zeros(2);
        e12.set(0, 1, 1.0);
        let p = Lsdfp::new(2, vec![e12, SymMat::from_diag(&[1.0, -1.0])], vec![0.0, 0.0]).unwrap();
        let rep = validate(&p);
        assert_eq!(rep.rank, 2);
        assert_eq!(rep.into_result(), Err(ProblemError::ZeroRhs));
    }

    #[test]
    fn shape_errors() {
        assert!(Lsdfp::new(2, vec![SymMat::identity(3)], vec![1.0]).is_err());
        assert!(Lsdfp::new(2, vec![SymMat::identity(2)], vec![]).is_err());
        assert!(Lsdfp::new(1, vec![SymMat::identity(1); 2], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn generator_argument_checks() {
        assert!(matches!(generate(3, 2, 3, 0), Err(ProblemError::InvalidArguments(_))));
        assert!(matches!(generate(3, 2, 0, 0), Err(ProblemError::InvalidArguments(_))));
        assert!(matches!(generate(3, 7, 1, 0), Err(ProblemError::InvalidArguments(_))));
    }
}
