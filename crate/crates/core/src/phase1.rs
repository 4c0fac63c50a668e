//! Starting points.
//!
//! The warm start needs `(y₀, Y₀)` with `Σ y₀ᵢ A_i + Y₀ = 0` and `Y₀ ≻ 0`.
//! Such a point is found from the auxiliary problem
//!
//! ```text
//! Tr(A_i X) = 0,  Tr(X) = 1,  X ⪰ 0
//! ```
//!
//! whose dual is `min t  s.t.  Σ y_i A_i ⪯ tI`. A strictly feasible dual
//! exists exactly when the optimal `t` is negative, and then the auxiliary
//! primal is infeasible and the run drives `τ` to zero along a dual ray.

use alloc::vec;
use alloc::vec::Vec;

use crate::embed::{HPoint, Outcome};
use crate::error::{IpmError, Phase1Error};
use crate::ipm::{run_with, Params};
use crate::problem::Lsdfp;
use crate::symcore::{pd_inverse, SymMat};

/// Required `λ_min(Y₀) / ‖Y₀‖_F`.
pub const DEFAULT_MARGIN: f64 = 1e-3;
pub const DEFAULT_MU0: f64 = 1.0;

/// `Y = −Σ y_i A_i` when it clears the margin.
fn dual_candidate(p: &Lsdfp, y: &[f64], margin: f64) -> Option<SymMat> {
    let z = p.apply_at(y).scale(-1.0);
    let norm = z.frobenius_norm();
    (norm > 0.0 && z.min_eigenvalue() >= margin * norm).then_some(z)
}

/// Rescales `y` so that `Tr(−Σ y_i A_i) = n` and rebuilds `Y` from it,
/// keeping the dual equation exact.
fn normalized(p: &Lsdfp, y: &[f64], z: &SymMat) -> (Vec<f64>, SymMat) {
    let t = p.n() as f64 / z.trace();
    let y: Vec<f64> = y.iter().map(|v| v * t).collect();
    let z = p.apply_at(&y).scale(-1.0);
    (y, z)
}

/// Finds `(y₀, Y₀)` with `Y₀ = −Σ y₀ᵢ A_i` and
/// `λ_min(Y₀) ≥ margin ‖Y₀‖_F`, normalized to `Tr(Y₀) = n`.
pub fn find_dual_interior(p: &Lsdfp, margin: f64) -> Result<(Vec<f64>, SymMat), Phase1Error> {
    find_dual_interior_with(p, margin, &Params::default())
}

pub fn find_dual_interior_with(
    p: &Lsdfp,
    margin: f64,
    params: &Params,
) -> Result<(Vec<f64>, SymMat), Phase1Error> {
    let (n, m) = (p.n(), p.m());
    // least-squares projection of −I onto span{A_i} settles many instances
    if let Ok(y) = p.recover_y(&SymMat::identity(n)) {
        if let Some(z) = dual_candidate(p, &y, margin) {
            return Ok(normalized(p, &y, &z));
        }
    }

    let mut a = p.a().to_vec();
    a.push(SymMat::identity(n).scale(-1.0));
    let mut b = vec![0.0; m];
    b.push(-1.0);
    let aux = Lsdfp::new(n, a, b)?;
    let start = cold_start(&aux, 1.0);

    let mut found: Option<Vec<f64>> = None;
    let result = run_with(&aux, &start, params, |_, pt| {
        let y = &pt.y[..m];
        if dual_candidate(p, y, margin).is_some() {
            found = Some(y.to_vec());
            true
        } else {
            false
        }
    });
    if let Some(y) = found {
        let z = dual_candidate(p, &y, margin).expect("checked in the callback");
        return Ok(normalized(p, &y, &z));
    }
    match result {
        Ok(res) => match res.outcome {
            Outcome::Solved(sol) => Err(Phase1Error::NotStrictlyFeasible {
                aux_optimum: -sol.y[m],
            }),
            _ => {
                let y = &res.point.y[..m];
                match dual_candidate(p, y, margin) {
                    Some(z) => Ok(normalized(p, y, &z)),
                    None => Err(Phase1Error::Inconclusive {
                        iterations: res.trace.len(),
                    }),
                }
            }
        },
        Err(IpmError::MaxIterExceeded { iterations, .. }) => {
            Err(Phase1Error::Inconclusive { iterations })
        }
        Err(e) => Err(e.into()),
    }
}

/// `X₀ = μ₀ Y₀⁻¹, τ₀ = 1, κ₀ = μ₀`: exactly centered with total
/// complementarity `(n+1) μ₀`.
pub fn centered_start(p: &Lsdfp, y0: &[f64], z0: &SymMat, mu0: f64) -> Result<HPoint, Phase1Error> {
    if !(mu0 > 0.0) {
        return Err(Phase1Error::InvalidStart);
    }
    let residual = p.apply_at(y0).add(z0).frobenius_norm();
    if !(residual <= 1e-10 * p.scale().max(z0.frobenius_norm())) {
        return Err(Phase1Error::NotDualFeasible { residual });
    }
    let inv = pd_inverse(z0).map_err(|_| Phase1Error::InvalidStart)?;
    Ok(HPoint {
        x: inv.scale(mu0),
        y: y0.to_vec(),
        z: z0.clone(),
        tau: 1.0,
        kappa: mu0,
    })
}

/// `X₀ = Y₀ = ρI, y₀ = 0, τ₀ = κ₀ = ρ`, centered with `μ₀ = ρ²`.
pub fn cold_start(p: &Lsdfp, rho: f64) -> HPoint {
    let n = p.n();
    HPoint {
        x: SymMat::identity(n).scale(rho),
        y: vec![0.0; p.m()],
        z: SymMat::identity(n).scale(rho),
        tau: rho,
        kappa: rho,
    }
}

/// Warm start from the phase-I point with default margin.
pub fn warm_start(p: &Lsdfp, mu0: f64) -> Result<HPoint, Phase1Error> {
    let (y0, z0) = find_dual_interior(p, DEFAULT_MARGIN)?;
    centered_start(p, &y0, &z0, mu0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::neighborhood_distance;

    #[test]
    fn negative_identity_is_immediate() {
        let p = Lsdfp::new(3, vec![SymMat::identity(3).scale(-1.0)], vec![1.0]).unwrap();
        let (y, z) = find_dual_interior(&p, DEFAULT_MARGIN).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-15);
        assert!(z.sub(&SymMat::identity(3)).max_abs() < 1e-15);
    }

    #[test]
    fn identity_constraint_uses_negative_multiplier() {
        let p = Lsdfp::new(2, vec![SymMat::identity(2)], vec![1.0]).unwrap();
        let (y, z) = find_dual_interior(&p, DEFAULT_MARGIN).unwrap();
        assert!(y[0] < 0.0);
        assert!(z.min_eigenvalue() > 0.0);
    }

    #[test]
    fn indefinite_span_is_not_strictly_feasible() {
        let p = Lsdfp::new(2, vec![SymMat::from_diag(&[1.0, -1.0])], vec![1.0]).unwrap();
        let err = find_dual_interior(&p, DEFAULT_MARGIN).unwrap_err();
        assert!(matches!(err, Phase1Error::NotStrictlyFeasible { .. }), "{err:?}");
    }

    #[test]
    fn centered_start_example() {
        let p = Lsdfp::new(2, vec![SymMat::identity(2)], vec![1.0]).unwrap();
        let pt = centered_start(&p, &[-2.0], &SymMat::identity(2).scale(2.0), 1.0).unwrap();
        assert!(pt.x.sub(&SymMat::identity(2).scale(0.5)).max_abs() < 1e-15);
        assert!((pt.mu() - 1.0).abs() < 1e-15);
        let (d, _) = neighborhood_distance(&pt).unwrap();
        assert!(d < 1e-14);
    }

    #[test]
    fn centered_start_rejects_infeasible() {
        let p = Lsdfp::new(2, vec![SymMat::identity(2)], vec![1.0]).unwrap();
        let err = centered_start(&p, &[-1.0], &SymMat::identity(2).scale(2.0), 1.0).unwrap_err();
        assert!(matches!(err, Phase1Error::NotDualFeasible { .. }));
    }

    #[test]
    fn cold_start_is_centered() {
        let p = Lsdfp::new(2, vec![SymMat::identity(2)], vec![1.0]).unwrap();
        let pt = cold_start(&p, 3.0);
        let (d, mu) = neighborhood_distance(&pt).unwrap();
        assert_eq!(mu, 9.0);
        assert_eq!(d, 0.0);
    }
}
