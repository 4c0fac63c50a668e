//! Dual HKM Newton systems.
//!
//! For the homogeneous model the unknowns `(ΔX, Δy, ΔY, Δτ, Δκ)` solve
//!
//! ```text
//! Y½(XΔY + ΔX Y)Y^-½ + Y^-½(ΔY X + YΔX)Y½ = 2(tI − Y½ X Y½)
//! κΔτ + τΔκ = t − τκ
//! Tr(A_i ΔX) − b_i Δτ = −r̄_i
//! Σ Δy_i A_i + ΔY = −s̄
//! Δκ − bᵀΔy = −γ̄
//! ```
//!
//! with target `t = σμ`. The SDLCP form has unknowns `(ΔX̂, ΔŶ)`, the same
//! first equation on `S^{n+1}` and `Â(ΔX̂) + B̂(ΔŶ) = −r̄`. Both are
//! assembled densely in `svec` coordinates and solved by LU.

use alloc::vec;
use alloc::vec::Vec;

use crate::dense::{self, DenseMat};
use crate::embed::{interior_sqrt, HPoint, Residuals};
use crate::error::NewtonError;
use crate::problem::Lsdfp;
use crate::sdlcp::{HatPoint, SdlcpOps};
use crate::symcore::{smat_values, svec_basis, svec_values, tri, PsdSqrt, SymMat};

#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    pub dx: SymMat,
    pub dy: Vec<f64>,
    pub dz: SymMat,
    pub dtau: f64,
    pub dkappa: f64,
}

impl Direction {
    pub fn max_abs(&self) -> f64 {
        self.dx
            .max_abs()
            .max(self.dz.max_abs())
            .max(self.dy.iter().fold(0.0, |a, v| a.max(v.abs())))
            .max(self.dtau.abs())
            .max(self.dkappa.abs())
    }
}

/// `pt + α d`
pub fn step(pt: &HPoint, d: &Direction, alpha: f64) -> HPoint {
    HPoint {
        x: pt.x.axpy(alpha, &d.dx),
        y: pt.y.iter().zip(&d.dy).map(|(y, dy)| y + alpha * dy).collect(),
        z: pt.z.axpy(alpha, &d.dz),
        tau: pt.tau + alpha * d.dtau,
        kappa: pt.kappa + alpha * d.dkappa,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HatDirection {
    pub dxh: SymMat,
    pub dyh: SymMat,
}

pub fn hat_step(hp: &HatPoint, d: &HatDirection, alpha: f64) -> HatPoint {
    HatPoint {
        xh: hp.xh.axpy(alpha, &d.dxh),
        yh: hp.yh.axpy(alpha, &d.dyh),
    }
}

fn sym_product(a: &DenseMat, b: &DenseMat) -> SymMat {
    SymMat::sym_part(&a.matmul(b))
}

/// `2 S M S` for `M = ΔX`.
fn op_dx(s: &DenseMat, dx: &SymMat) -> SymMat {
    sym_product(&s.matmul(&dx.to_dense()), s).scale(2.0)
}

/// `2 sym(S X ΔY S⁻¹)`, with `sx = S X`.
fn op_dy(sx: &DenseMat, s_inv: &DenseMat, dy: &SymMat) -> SymMat {
    sym_product(&sx.matmul(&dy.to_dense()), s_inv).scale(2.0)
}

/// Left and right side of the symmetrized first equation.
struct Sys1 {
    s: DenseMat,
    s_inv: DenseMat,
    sx: DenseMat,
    rhs: SymMat,
}

impl Sys1 {
    fn new(x: &SymMat, root: &PsdSqrt, target: f64) -> Self {
        let s = root.sqrt.to_dense();
        let sx = s.matmul(&x.to_dense());
        let sxs = SymMat::sym_part(&sx.matmul(&s));
        Self {
            rhs: SymMat::identity(x.n()).scale(target).sub(&sxs).scale(2.0),
            s_inv: root.inv_sqrt.to_dense(),
            sx,
            s,
        }
    }

    fn apply(&self, dx: &SymMat, dy: &SymMat) -> SymMat {
        op_dx(&self.s, dx).add(&op_dy(&self.sx, &self.s_inv, dy))
    }

    /// Writes the columns of both operators into `mat` at row `row0`,
    /// `ΔX` columns from `col_x` and `ΔY` columns from `col_y`.
    fn assemble(&self, mat: &mut DenseMat, row0: usize, col_x: usize, col_y: usize) {
        let n = self.s.rows();
        for k in 0..tri(n) {
            let e = svec_basis(n, k);
            for (i, v) in svec_values(&op_dx(&self.s, &e)).into_iter().enumerate() {
                mat.set(row0 + i, col_x + k, v);
            }
            for (i, v) in svec_values(&op_dy(&self.sx, &self.s_inv, &e))
                .into_iter()
                .enumerate()
            {
                mat.set(row0 + i, col_y + k, v);
            }
        }
    }
}

/// Direction with `σ μ` as centering target, `μ` taken from `pt`.
pub fn solve_direction(
    p: &Lsdfp,
    pt: &HPoint,
    sigma: f64,
    targets: &Residuals,
) -> Result<Direction, NewtonError> {
    solve_direction_to(p, pt, sigma * pt.mu(), targets)
}

/// Direction with an explicit centering target `t`.
pub fn solve_direction_to(
    p: &Lsdfp,
    pt: &HPoint,
    target: f64,
    targets: &Residuals,
) -> Result<Direction, NewtonError> {
    let root = interior_sqrt(&pt.z)?;
    solve_with_root(p, pt, &root, target, targets)
}

pub(crate) fn solve_with_root(
    p: &Lsdfp,
    pt: &HPoint,
    root: &PsdSqrt,
    target: f64,
    targets: &Residuals,
) -> Result<Direction, NewtonError> {
    let (n, m) = (p.n(), p.m());
    let nt = tri(n);
    let dim = 2 * nt + m + 2;
    let (cx, cy, cz, ct, ck) = (0, nt, nt + m, 2 * nt + m, 2 * nt + m + 1);
    let mut mat = DenseMat::zeros(dim, dim);
    let mut rhs = vec![0.0; dim];

    let sys1 = Sys1::new(&pt.x, root, target);
    sys1.assemble(&mut mat, 0, cx, cz);
    rhs[..nt].copy_from_slice(&svec_values(&sys1.rhs));

    let r2 = nt;
    mat.set(r2, ct, pt.kappa);
    mat.set(r2, ck, pt.tau);
    rhs[r2] = target - pt.tau * pt.kappa;

    let r3 = nt + 1;
    for (i, (ai, &bi)) in p.a().iter().zip(p.b()).enumerate() {
        for (k, v) in svec_values(ai).into_iter().enumerate() {
            mat.set(r3 + i, cx + k, v);
        }
        mat.set(r3 + i, ct, -bi);
        rhs[r3 + i] = -targets.r[i];
    }

    let r4 = nt + 1 + m;
    for (i, ai) in p.a().iter().enumerate() {
        for (k, v) in svec_values(ai).into_iter().enumerate() {
            mat.set(r4 + k, cy + i, v);
        }
    }
    for k in 0..nt {
        mat.set(r4 + k, cz + k, 1.0);
    }
    for (k, v) in svec_values(&targets.s).into_iter().enumerate() {
        rhs[r4 + k] = -v;
    }

    let r5 = 2 * nt + 1 + m;
    mat.set(r5, ck, 1.0);
    for (i, &bi) in p.b().iter().enumerate() {
        mat.set(r5, cy + i, -bi);
    }
    rhs[r5] = -targets.gamma;

    let u = dense::solve_refined(&mat, &rhs).map_err(NewtonError::from_solve)?;
    Ok(Direction {
        dx: smat_values(n, &u[cx..cx + nt]),
        dy: u[cy..cy + m].to_vec(),
        dz: smat_values(n, &u[cz..cz + nt]),
        dtau: u[ct],
        dkappa: u[ck],
    })
}

/// Relative residual of each of the five equations, each scaled by
/// `max(1, ‖right-hand side‖)`.
pub fn direction_residuals(
    p: &Lsdfp,
    pt: &HPoint,
    target: f64,
    targets: &Residuals,
    d: &Direction,
) -> Result<[f64; 5], NewtonError> {
    let root = interior_sqrt(&pt.z)?;
    let sys1 = Sys1::new(&pt.x, &root, target);
    let e1 = sys1.apply(&d.dx, &d.dz).sub(&sys1.rhs).frobenius_norm()
        / sys1.rhs.frobenius_norm().max(1.0);

    let rhs2 = target - pt.tau * pt.kappa;
    let e2 = (pt.kappa * d.dtau + pt.tau * d.dkappa - rhs2).abs() / rhs2.abs().max(1.0);

    let mut sq3 = 0.0;
    for ((ai, &bi), &ri) in p.a().iter().zip(p.b()).zip(&targets.r) {
        let e = ai.dot(&d.dx) - bi * d.dtau + ri;
        sq3 += e * e;
    }
    let e3 = libm::sqrt(sq3) / targets.norm_r().max(1.0);

    let e4 = p.apply_at(&d.dy).add(&d.dz).add(&targets.s).frobenius_norm()
        / targets.norm_s().max(1.0);

    let e5 = (d.dkappa - dense::dot(p.b(), &d.dy) + targets.gamma).abs()
        / targets.gamma.abs().max(1.0);
    Ok([e1, e2, e3, e4, e5])
}

/// Hat-system direction with target `σ μ̂`.
pub fn solve_hat_direction(
    ops: &SdlcpOps,
    hp: &HatPoint,
    sigma: f64,
    rbar: &[f64],
) -> Result<HatDirection, NewtonError> {
    solve_hat_direction_to(ops, hp, sigma * hp.mu(), rbar)
}

pub fn solve_hat_direction_to(
    ops: &SdlcpOps,
    hp: &HatPoint,
    target: f64,
    rbar: &[f64],
) -> Result<HatDirection, NewtonError> {
    let root = interior_sqrt(&hp.yh)?;
    solve_hat_with_root(ops, hp, &root, target, rbar)
}

pub(crate) fn solve_hat_with_root(
    ops: &SdlcpOps,
    hp: &HatPoint,
    root: &PsdSqrt,
    target: f64,
    rbar: &[f64],
) -> Result<HatDirection, NewtonError> {
    let n1 = ops.n1();
    let nt1 = ops.rows();
    if rbar.len() != nt1 {
        return Err(crate::error::LinalgError::DimensionMismatch {
            expected: nt1,
            found: rbar.len(),
        }
        .into());
    }
    let dim = 2 * nt1;
    let mut mat = DenseMat::zeros(dim, dim);
    let mut rhs = vec![0.0; dim];

    let sys1 = Sys1::new(&hp.xh, root, target);
    sys1.assemble(&mut mat, 0, 0, nt1);
    rhs[..nt1].copy_from_slice(&svec_values(&sys1.rhs));

    let am = ops.a_matrix();
    let bm = ops.b_matrix();
    for i in 0..nt1 {
        for k in 0..nt1 {
            mat.set(nt1 + i, k, am.get(i, k));
            mat.set(nt1 + i, nt1 + k, bm.get(i, k));
        }
        rhs[nt1 + i] = -rbar[i];
    }
    let u = dense::solve_refined(&mat, &rhs).map_err(NewtonError::from_solve)?;
    Ok(HatDirection {
        dxh: smat_values(n1, &u[..nt1]),
        dyh: smat_values(n1, &u[nt1..]),
    })
}

/// Relative residuals of the two hat equations.
pub fn hat_direction_residuals(
    ops: &SdlcpOps,
    hp: &HatPoint,
    target: f64,
    rbar: &[f64],
    d: &HatDirection,
) -> Result<[f64; 2], NewtonError> {
    let root = interior_sqrt(&hp.yh)?;
    let sys1 = Sys1::new(&hp.xh, &root, target);
    let e1 = sys1.apply(&d.dxh, &d.dyh).sub(&sys1.rhs).frobenius_norm()
        / sys1.rhs.frobenius_norm().max(1.0);
    let lhs: Vec<f64> = ops
        .apply_a(&d.dxh)
        .iter()
        .zip(ops.apply_b(&d.dyh))
        .zip(rbar)
        .map(|((a, b), r)| a + b + r)
        .collect();
    let e2 = dense::norm2(&lhs) / dense::norm2(rbar).max(1.0);
    Ok([e1, e2])
}

/// `δ = ‖Ŷ½ ΔX̂ ΔŶ Ŷ^-½‖_F / μ` evaluated blockwise on
/// `(blkdiag(ΔX, Δτ), blkdiag(ΔY, Δκ))`.
pub fn delta_measure(pt: &HPoint, d: &Direction) -> Result<f64, NewtonError> {
    let root = interior_sqrt(&pt.z)?;
    Ok(delta_with_root(&root, pt.mu(), d))
}

pub(crate) fn delta_with_root(root: &PsdSqrt, mu: f64, d: &Direction) -> f64 {
    let m = root
        .sqrt
        .to_dense()
        .matmul(&d.dx.to_dense())
        .matmul(&d.dz.to_dense())
        .matmul(&root.inv_sqrt.to_dense());
    let f = m.frobenius_norm();
    let t = d.dtau * d.dkappa;
    libm::sqrt(f * f + t * t) / mu
}

pub fn hat_delta_measure(hp: &HatPoint, d: &HatDirection) -> Result<f64, NewtonError> {
    let root = interior_sqrt(&hp.yh)?;
    Ok(hat_delta_with_root(&root, hp.mu(), d))
}

pub(crate) fn hat_delta_with_root(root: &PsdSqrt, mu: f64, d: &HatDirection) -> f64 {
    root.sqrt
        .to_dense()
        .matmul(&d.dxh.to_dense())
        .matmul(&d.dyh.to_dense())
        .matmul(&root.inv_sqrt.to_dense())
        .frobenius_norm()
        / mu
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::residuals;

    fn scalar_problem() -> Lsdfp {
        Lsdfp::new(1, vec![SymMat::identity(1)], vec![1.0]).unwrap()
    }

    #[test]
    fn centered_feasible_corrector_is_zero() {
        let p = scalar_problem();
        let pt = HPoint {
            x: SymMat::identity(1),
            y: vec![0.0],
            z: SymMat::identity(1),
            tau: 1.0,
            kappa: 1.0,
        };
        let d = solve_direction(&p, &pt, 1.0, &Residuals::zero(1, 1)).unwrap();
        assert!(d.max_abs() < 1e-15);
    }

    #[test]
    fn scalar_closed_form() {
        // n = m = 1, A = 1, b = 1: ΔX − Δτ = −r, Δy + ΔY = −s, Δκ − Δy = −γ,
        // 2yΔx + 2xΔY = 2(t − xy), κΔτ + τΔκ = t − τκ.
        let p = scalar_problem();
        let pt = HPoint {
            x: SymMat::from_diag(&[2.0]),
            y: vec![0.5],
            z: SymMat::from_diag(&[3.0]),
            tau: 1.5,
            kappa: 0.25,
        };
        let t = 0.7;
        let tg = residuals(&p, &pt);
        let d = solve_direction_to(&p, &pt, t, &tg).unwrap();
        let (x, yv, tau, kap) = (2.0, 3.0, 1.5, 0.25);
        let (r, s, g) = (tg.r[0], tg.s.get(0, 0), tg.gamma);
        // unknowns a = Δx, c = Δy, e = ΔY, f = Δτ, h = Δκ; eliminate
        // a = f − r, e = −s − c, h = c − g
        // yv (f − r) + x(−s − c) = t − x yv
        // kap f + tau (c − g) = t − tau kap
        let m = [[yv, -x], [kap, tau]];
        let rhs = [t - x * yv + yv * r + x * s, t - tau * kap + tau * g];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let f = (rhs[0] * m[1][1] - m[0][1] * rhs[1]) / det;
        let c = (m[0][0] * rhs[1] - rhs[0] * m[1][0]) / det;
        assert!((d.dtau - f).abs() < 1e-12);
        assert!((d.dy[0] - c).abs() < 1e-12);
        assert!((d.dx.get(0, 0) - (f - r)).abs() < 1e-12);
        assert!((d.dz.get(0, 0) - (-s - c)).abs() < 1e-12);
        assert!((d.dkappa - (c - g)).abs() < 1e-12);
    }

    #[test]
    fn zero_direction_has_zero_delta() {
        let pt = HPoint {
            x: SymMat::identity(2),
            y: vec![0.0],
            z: SymMat::identity(2),
            tau: 1.0,
            kappa: 1.0,
        };
        let d = Direction {
            dx: SymMat::zeros(2),
            dy: vec![0.0],
            dz: SymMat::zeros(2),
            dtau: 0.0,
            dkappa: 0.0,
        };
        assert_eq!(delta_measure(&pt, &d).unwrap(), 0.0);
    }
}
