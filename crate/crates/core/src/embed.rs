//! The homogeneous feasibility model with zero cost:
//!
//! ```text
//! Tr(A_i X) − b_i τ = 0,   Σ y_i A_i + Y = 0,   κ − bᵀy = 0,
//! X, Y ⪰ 0,  τ, κ ≥ 0.
//! ```
//!
//! Its residuals, the central-path neighborhood and the `τ`/`κ` outcome test.

use alloc::vec::Vec;

use crate::dense;
use crate::error::EmbedError;
use crate::problem::Lsdfp;
use crate::symcore::{psd_sqrt_tol, PsdSqrt, SymMat};

/// Iterate `(X, y, Y, τ, κ)`; the dual slack `Y` is stored as `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct HPoint {
    pub x: SymMat,
    pub y: Vec<f64>,
    pub z: SymMat,
    pub tau: f64,
    pub kappa: f64,
}

impl HPoint {
    pub fn n(&self) -> usize {
        self.x.n()
    }

    /// `(Tr(XY) + τκ) / (n + 1)`
    pub fn mu(&self) -> f64 {
        (self.x.dot(&self.z) + self.tau * self.kappa) / (self.n() as f64 + 1.0)
    }

    pub fn scaled(&self, t: f64) -> HPoint {
        HPoint {
            x: self.x.scale(t),
            y: self.y.iter().map(|v| t * v).collect(),
            z: self.z.scale(t),
            tau: t * self.tau,
            kappa: t * self.kappa,
        }
    }

    /// Errors unless `X, Y ≻ 0` and `τ, κ > 0`.
    pub fn check_interior(&self) -> Result<(), EmbedError> {
        if !(self.tau > 0.0) {
            return Err(EmbedError::NotInterior("tau is not positive"));
        }
        if !(self.kappa > 0.0) {
            return Err(EmbedError::NotInterior("kappa is not positive"));
        }
        if !self.x.is_positive_definite() {
            return Err(EmbedError::NotInterior("X is not positive definite"));
        }
        if !self.z.is_positive_definite() {
            return Err(EmbedError::NotInterior("Y is not positive definite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    /// `r_i = Tr(A_i X) − b_i τ`
    pub r: Vec<f64>,
    /// `s = Σ y_i A_i + Y`
    pub s: SymMat,
    /// `γ = κ − bᵀy`
    pub gamma: f64,
}

impl Residuals {
    pub fn zero(n: usize, m: usize) -> Self {
        Self {
            r: alloc::vec![0.0; m],
            s: SymMat::zeros(n),
            gamma: 0.0,
        }
    }

    pub fn norm_r(&self) -> f64 {
        dense::norm2(&self.r)
    }

    pub fn norm_s(&self) -> f64 {
        self.s.frobenius_norm()
    }

    pub fn scale(&self, t: f64) -> Self {
        Self {
            r: self.r.iter().map(|v| t * v).collect(),
            s: self.s.scale(t),
            gamma: t * self.gamma,
        }
    }
}

pub fn residuals(p: &Lsdfp, pt: &HPoint) -> Residuals {
    let r = p
        .apply_a(&pt.x)
        .iter()
        .zip(p.b())
        .map(|(ax, b)| ax - b * pt.tau)
        .collect();
    let s = p.apply_at(&pt.y).add(&pt.z);
    let gamma = pt.kappa - dense::dot(p.b(), &pt.y);
    Residuals { r, s, gamma }
}

/// Numerical defect of the identity
/// `Tr(XY) + τκ = Tr(sX) − yᵀr + τγ`, which forces the total
/// complementarity to zero at any exactly feasible point.
pub fn gap_identity_defect(p: &Lsdfp, pt: &HPoint) -> f64 {
    let res = residuals(p, pt);
    let lhs = pt.x.dot(&pt.z) + pt.tau * pt.kappa;
    let rhs = res.s.dot(&pt.x) - dense::dot(&pt.y, &res.r) + pt.tau * res.gamma;
    (lhs - rhs).abs()
}

/// `Y^{1/2}` requiring strict positivity only.
pub(crate) fn interior_sqrt(z: &SymMat) -> Result<PsdSqrt, EmbedError> {
    psd_sqrt_tol(z, 0.0).map_err(|_| EmbedError::NotInterior("Y is not positive definite"))
}

/// Distance to the central path at the point's own `μ`; returns
/// `(dist, μ)`.
pub fn neighborhood_distance(pt: &HPoint) -> Result<(f64, f64), EmbedError> {
    let mu = pt.mu();
    Ok((neighborhood_distance_at(pt, mu)?, mu))
}

/// `√(‖Y^{1/2} X Y^{1/2} − μI‖_F² + (τκ − μ)²)` at a given `μ`.
pub fn neighborhood_distance_at(pt: &HPoint, mu: f64) -> Result<f64, EmbedError> {
    let root = interior_sqrt(&pt.z)?;
    if !pt.x.is_positive_definite() {
        return Err(EmbedError::NotInterior("X is not positive definite"));
    }
    Ok(distance_with_root(pt, &root.sqrt, mu))
}

pub(crate) fn distance_with_root(pt: &HPoint, zsqrt: &SymMat, mu: f64) -> f64 {
    let w = zsqrt.congruence(&pt.x).shift(-mu);
    let t = pt.tau * pt.kappa - mu;
    libm::sqrt(w.dot(&w) + t * t)
}

/// Membership in `N(β, μ)`: interior and `dist ≤ β μ` at the given `μ`.
pub fn in_neighborhood(pt: &HPoint, beta: f64, mu: f64) -> bool {
    if !(pt.tau > 0.0 && pt.kappa > 0.0 && mu > 0.0) {
        return false;
    }
    match neighborhood_distance_at(pt, mu) {
        Ok(d) => d <= beta * mu,
        Err(_) => false,
    }
}

/// `(X/τ, y/τ, Y/τ)`
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: SymMat,
    pub y: Vec<f64>,
    pub z: SymMat,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Solved(Solution),
    NoOptimalSolution,
    Continue,
}

/// Quantities the stopping test compares against `eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopMeasures {
    /// `(Tr(XY) + τκ) / τ²`
    pub gap: f64,
    /// `max_i |r_i / τ|`
    pub primal: f64,
    /// `‖s / τ‖_F`
    pub dual: f64,
}

impl StopMeasures {
    pub fn max(&self) -> f64 {
        self.gap.max(self.primal).max(self.dual)
    }
}

pub fn stop_measures(p: &Lsdfp, pt: &HPoint) -> StopMeasures {
    let res = residuals(p, pt);
    let tau = pt.tau;
    StopMeasures {
        gap: (pt.x.dot(&pt.z) + tau * pt.kappa) / (tau * tau),
        primal: res.r.iter().fold(0.0f64, |a, v| a.max(v.abs())) / tau,
        dual: res.s.frobenius_norm() / tau,
    }
}

/// `Solved` when every stop measure is at most `eps`; `NoOptimalSolution`
/// when `τ ≤ eps_tau` and `κ/τ ≥ 1/eps_tau`; otherwise `Continue`.
pub fn classify(p: &Lsdfp, pt: &HPoint, eps: f64, eps_tau: f64) -> Outcome {
    if pt.tau > 0.0 && stop_measures(p, pt).max() <= eps {
        return Outcome::Solved(solution_of(pt));
    }
    if tau_collapsed(pt, eps_tau) {
        return Outcome::NoOptimalSolution;
    }
    Outcome::Continue
}

pub(crate) fn tau_collapsed(pt: &HPoint, eps_tau: f64) -> bool {
    pt.tau <= eps_tau && pt.kappa >= pt.tau / eps_tau
}

pub fn solution_of(pt: &HPoint) -> Solution {
    let inv = 1.0 / pt.tau;
    Solution {
        x: pt.x.scale(inv),
        y: pt.y.iter().map(|v| v * inv).collect(),
        z: pt.z.scale(inv),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn unit_point(n: usize, m: usize) -> HPoint {
        HPoint {
            x: SymMat::identity(n),
            y: vec![0.0; m],
            z: SymMat::identity(n),
            tau: 1.0,
            kappa: 1.0,
        }
    }

    #[test]
    fn residuals_on_unit_point() {
        let p = Lsdfp::new(2, vec![SymMat::identity(2)], vec![1.0]).unwrap();
        let res = residuals(&p, &unit_point(2, 1));
        assert_eq!(res.r, vec![1.0]);
        assert_eq!(res.s, SymMat::identity(2));
        assert_eq!(res.gamma, 1.0);
    }

    #[test]
    fn scalar_neighborhood_distance() {
        let pt = HPoint {
            x: SymMat::from_diag(&[2.0]),
            y: vec![0.0],
            z: SymMat::from_diag(&[2.0]),
            tau: 1.0,
            kappa: 1.0,
        };
        let (d, mu) = neighborhood_distance(&pt).unwrap();
        assert_eq!(mu, 2.5);
        assert!((d - 3.0 / libm::sqrt(2.0)).abs() < 1e-14);
    }

    #[test]
    fn centered_point_has_zero_distance() {
        let (d, mu) = neighborhood_distance(&unit_point(3, 1)).unwrap();
        assert_eq!(mu, 1.0);
        assert!(d < 1e-15);
    }

    #[test]
    fn non_interior_rejected() {
        let mut pt = unit_point(2, 1);
        pt.z = SymMat::from_diag(&[1.0, -1.0]);
        assert!(neighborhood_distance(&pt).is_err());
    }

    #[test]
    fn classify_thresholds() {
        let p = Lsdfp::new(2, vec![SymMat::identity(2)], vec![1.0]).unwrap();
        assert_eq!(classify(&p, &unit_point(2, 1), 1e-8, 1e-8), Outcome::Continue);
        let mut pt = unit_point(2, 1);
        pt.tau = 1e-12;
        assert_eq!(classify(&p, &pt, 1e-8, 1e-8), Outcome::NoOptimalSolution);
    }

    #[test]
    fn zero_point_gap_defect() {
        let p = Lsdfp::new(2, vec![SymMat::identity(2)], vec![1.0]).unwrap();
        let pt = HPoint {
            x: SymMat::zeros(2),
            y: vec![0.0],
            z: SymMat::zeros(2),
            tau: 0.0,
            kappa: 0.0,
        };
        assert_eq!(gap_identity_defect(&p, &pt), 0.0);
    }
}
