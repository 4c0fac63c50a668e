//! Predictor-corrector path following on the homogeneous model and on its
//! SDLCP form.
//!
//! Each iteration takes an affine predictor step (`σ = 0`) as far as the
//! wide neighborhood `N(β₂, (1−α)μ)` allows, then one full centering
//! corrector step back into `N(β₁, μ₊)` with `μ₊ = (1−ᾱ)μ`.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::dense;
use crate::embed::{
    classify, distance_with_root, interior_sqrt, residuals, solution_of, tau_collapsed, HPoint,
    Outcome, Residuals,
};
use crate::error::IpmError;
use crate::newton::{
    delta_with_root, hat_delta_with_root, hat_step, solve_hat_with_root, solve_with_root, step,
    Direction,
};
use crate::problem::Lsdfp;
use crate::sdlcp::{embed, HatPoint, SdlcpOps};
use crate::symcore::{psd_sqrt_tol, SymMat};

/// How the predictor step is picked inside `[α₁, α₂]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepRule {
    /// `ᾱ = α₂`, the longest step the wide neighborhood permits.
    #[default]
    Greedy,
    /// `ᾱ = α₁`, the guaranteed lower bound.
    Conservative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub eps_tau: f64,
    pub mu_floor: f64,
    pub max_iter: usize,
    pub bisect_tol: f64,
    pub step_rule: StepRule,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            beta1: 0.1,
            beta2: 0.3,
            eps: 1e-8,
            eps_tau: 1e-8,
            mu_floor: 1e-14,
            max_iter: 200,
            bisect_tol: 1e-12,
            step_rule: StepRule::Greedy,
        }
    }
}

impl Params {
    /// Checks `β₂²/(2(1−β₂)²) ≤ β₁ < β₂ < β₂/(1−β₂) < 1` and the
    /// tolerances.
    pub fn validate(&self) -> Result<(), IpmError> {
        let (b1, b2) = (self.beta1, self.beta2);
        if !(b1 > 0.0 && b2 > 0.0 && b2 < 1.0) {
            return Err(IpmError::InvalidParams("betas must lie in (0, 1)"));
        }
        let lower = b2 * b2 / (2.0 * (1.0 - b2) * (1.0 - b2));
        if !(lower <= b1 && b1 < b2 && b2 / (1.0 - b2) < 1.0) {
            return Err(IpmError::InvalidParams(
                "need beta2^2/(2(1-beta2)^2) <= beta1 < beta2 < beta2/(1-beta2) < 1",
            ));
        }
        if !(self.eps >= 0.0 && self.eps_tau > 0.0 && self.mu_floor >= 0.0) {
            return Err(IpmError::InvalidParams("tolerances must be nonnegative"));
        }
        if !(self.bisect_tol > 0.0 && self.bisect_tol < 1e-2) {
            return Err(IpmError::InvalidParams("bisect_tol must lie in (0, 1e-2)"));
        }
        Ok(())
    }
}

/// One accepted iteration; values refer to the new iterate `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterRecord {
    pub k: usize,
    /// `μ_k = (1−ᾱ) μ_{k−1}` as tracked by the algorithm.
    pub mu: f64,
    /// `μ` recomputed from the iterate.
    pub mu_actual: f64,
    pub alpha_bar: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub delta: f64,
    pub tau: f64,
    pub kappa: f64,
    pub norm_r: f64,
    pub norm_s: f64,
    pub gamma: f64,
    /// Distance of the corrected iterate to the central path at `μ_k`.
    pub nbr_dist: f64,
    /// Distance of the predictor point at `(1−ᾱ) μ_{k−1}`.
    pub pred_dist: f64,
    /// `μ_k / μ_{k−1}`
    pub ratio: f64,
    /// The predictor was stopped at the resolution floor rather than by
    /// the neighborhood.
    pub at_resolution: bool,
    /// `‖blkdiag(X, τ)‖_F ‖blkdiag(Y, κ)‖_F`; rounding the iterate moves
    /// `μ` by a small multiple of `ε` times this.
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IterTrace {
    pub mu0: f64,
    pub rows: Vec<IterRecord>,
}

impl IterTrace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.ratio).collect()
    }

    pub fn final_mu(&self) -> f64 {
        self.rows.last().map_or(self.mu0, |r| r.mu)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// The stopping test succeeded.
    Converged,
    /// `τ` collapsed relative to `κ`.
    TauCollapse,
    /// `μ` fell below `mu_floor`.
    MuFloor,
    /// The predictor reached `μ = 0` with a full step.
    ExactStep,
    /// `μ` reached the smallest value the iterate can resolve in double
    /// precision.
    PrecisionFloor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub outcome: Outcome,
    pub termination: Termination,
    pub point: HPoint,
    pub trace: IterTrace,
}

/// Predictor data for one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorStep {
    pub point: HPoint,
    pub direction: Direction,
    pub alpha_bar: f64,
    pub delta: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub dist: f64,
    /// The step was shortened to keep `μ` above the resolution floor.
    pub at_resolution: bool,
}

/// `α₁ = 2 / (√(1 + 4δ/(β₂−β₁)) + 1)`
pub fn alpha1(delta: f64, beta1: f64, beta2: f64) -> f64 {
    2.0 / (libm::sqrt(1.0 + 4.0 * delta / (beta2 - beta1)) + 1.0)
}

const VERIFY_SAMPLES: usize = 32;

/// Largest `α̃ ∈ [0, 1]` with `member(α)` for every `α ∈ [0, α̃]`,
/// assuming `member(0)`. Bisects for the first exit and then verifies
/// interior samples, bisecting again below any violation.
pub fn max_step(member: impl FnMut(f64) -> bool, tol: f64) -> f64 {
    max_step_within(member, 1.0, tol)
}

/// [`max_step`] restricted to `[0, hi]`.
pub fn max_step_within(mut member: impl FnMut(f64) -> bool, hi: f64, tol: f64) -> f64 {
    let mut hi_bound = hi;
    loop {
        let cand = if member(hi_bound) {
            hi_bound
        } else {
            let (mut lo, mut hi) = (0.0f64, hi_bound);
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                if member(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        let violation = (1..=VERIFY_SAMPLES)
            .map(|j| cand * j as f64 / (VERIFY_SAMPLES + 1) as f64)
            .find(|&a| !member(a));
        match violation {
            None => return cand,
            Some(a) => hi_bound = a,
        }
    }
}

/// Membership in `N(β, μ)` with the distance, or `None` outside the
/// interior.
fn member_dist(pt: &HPoint, mu: f64) -> Option<f64> {
    if !(pt.tau > 0.0 && pt.kappa > 0.0 && mu > 0.0) {
        return None;
    }
    let root = psd_sqrt_tol(&pt.z, 0.0).ok()?;
    // dist ≤ βμ < μ already forces X ≻ 0 once Y ≻ 0
    Some(distance_with_root(pt, &root.sqrt, mu))
}

fn exact_full_step(pt: &HPoint) -> bool {
    pt.tau > 0.0
        && pt.kappa >= 0.0
        && pt.x.min_eigenvalue() >= 0.0
        && pt.z.min_eigenvalue() >= 0.0
        && pt.x.dot(&pt.z) + pt.tau * pt.kappa == 0.0
}

/// Smallest `μ` whose `β₁`-neighborhood is resolvable for iterates with
/// `‖X‖_F ‖Y‖_F = scale`. Rounding the stored iterate alone moves
/// `Y½XY½` by about `ε ‖X‖ ‖Y‖`, so the neighborhood test is meaningless
/// once `β₁ μ` drops to that level.
pub fn mu_resolution(scale: f64, beta1: f64) -> f64 {
    RESOLUTION_FACTOR * f64::EPSILON * scale / beta1
}

const RESOLUTION_FACTOR: f64 = 16.0;

/// `‖blkdiag(X, τ)‖_F ‖blkdiag(Y, κ)‖_F`, the same for a point and its
/// embedding.
fn point_scale(pt: &HPoint) -> f64 {
    libm::hypot(pt.x.frobenius_norm(), pt.tau) * libm::hypot(pt.z.frobenius_norm(), pt.kappa)
}

fn hat_scale(hp: &HatPoint) -> f64 {
    hp.xh.frobenius_norm() * hp.yh.frobenius_norm()
}

/// Longest step keeping `(1−α) μ` at or above `mu_res`.
fn resolvable_step(mu: f64, mu_res: f64) -> f64 {
    (1.0 - mu_res / mu).clamp(0.0, 1.0)
}

/// Predictor from `pt ∈ N(β₁, μ)`, `μ` the tracked value.
pub fn predictor(p: &Lsdfp, pt: &HPoint, mu: f64, params: &Params) -> Result<PredictorStep, IpmError> {
    predictor_at(p, pt, mu, params, 0)
}

fn predictor_at(
    p: &Lsdfp,
    pt: &HPoint,
    mu: f64,
    params: &Params,
    k: usize,
) -> Result<PredictorStep, IpmError> {
    let root = interior_sqrt(&pt.z)?;
    let dist = distance_with_root(pt, &root.sqrt, mu);
    if !(dist <= params.beta1 * mu) {
        return Err(IpmError::NotInNeighborhood {
            k,
            dist,
            bound: params.beta1 * mu,
        });
    }
    let res = residuals(p, pt);
    let d = solve_with_root(p, pt, &root, 0.0, &res)?;
    let delta = delta_with_root(&root, mu, &d);
    let a1 = alpha1(delta, params.beta1, params.beta2);

    let full = step(pt, &d, 1.0);
    if exact_full_step(&full) {
        return Ok(PredictorStep {
            point: full,
            direction: d,
            alpha_bar: 1.0,
            delta,
            alpha1: a1,
            alpha2: 1.0,
            dist: 0.0,
            at_resolution: false,
        });
    }
    let beta2 = params.beta2;
    // membership below the resolution floor is decided by rounding noise,
    // so the search and the step-order check stop there
    let a_res = resolvable_step(
        mu,
        mu_resolution(point_scale(pt), params.beta1),
    );
    let a2 = max_step_within(
        |a| {
            let target = (1.0 - a) * mu;
            member_dist(&step(pt, &d, a), target).is_some_and(|dd| dd <= beta2 * target)
        },
        a_res,
        params.bisect_tol,
    );
    if a2 < a1.min(a_res) - params.bisect_tol {
        return Err(IpmError::StepOrderViolation {
            k,
            alpha1: a1,
            alpha2: a2,
        });
    }
    let alpha_bar = match params.step_rule {
        StepRule::Greedy => a2,
        StepRule::Conservative => a1.min(a2),
    };
    let at_resolution = a_res < 1.0 && alpha_bar >= a_res - params.bisect_tol;
    let point = step(pt, &d, alpha_bar);
    let dist = member_dist(&point, (1.0 - alpha_bar) * mu).unwrap_or(f64::INFINITY);
    Ok(PredictorStep {
        point,
        direction: d,
        alpha_bar,
        delta,
        alpha1: a1,
        alpha2: a2,
        dist,
        at_resolution,
    })
}

/// Unit corrector step from the predictor point, centering on
/// `μ₊ = (1−ᾱ)μ` with zero residual targets. Returns the new point and its
/// distance at `μ₊`.
pub fn corrector(
    p: &Lsdfp,
    pt_bar: &HPoint,
    mu_plus: f64,
    params: &Params,
) -> Result<(HPoint, f64), IpmError> {
    corrector_at(p, pt_bar, mu_plus, params, 0)
}

fn corrector_at(
    p: &Lsdfp,
    pt_bar: &HPoint,
    mu_plus: f64,
    params: &Params,
    k: usize,
) -> Result<(HPoint, f64), IpmError> {
    let root = interior_sqrt(&pt_bar.z)?;
    let zero = Residuals::zero(p.n(), p.m());
    let d = solve_with_root(p, pt_bar, &root, mu_plus, &zero)?;
    let next = step(pt_bar, &d, 1.0);
    let bound = params.beta1 * mu_plus;
    match member_dist(&next, mu_plus) {
        Some(dist) if dist <= bound => Ok((next, dist)),
        other => Err(IpmError::CorrectorEscape {
            k,
            dist: other.unwrap_or(f64::INFINITY),
            bound,
        }),
    }
}

/// Runs the homogeneous-model algorithm from `start ∈ N(β₁, μ₀)`.
pub fn run(p: &Lsdfp, start: &HPoint, params: &Params) -> Result<RunResult, IpmError> {
    run_with(p, start, params, |_, _| false)
}

/// Like [`run`] but calls `stop(k, point)` after each accepted iteration;
/// returning `true` ends the run with `Outcome::Continue`.
pub fn run_with(
    p: &Lsdfp,
    start: &HPoint,
    params: &Params,
    mut stop: impl FnMut(usize, &HPoint) -> bool,
) -> Result<RunResult, IpmError> {
    params.validate()?;
    let mut pt = start.clone();
    let mut mu = pt.mu();
    let mut trace = IterTrace {
        mu0: mu,
        rows: Vec::new(),
    };
    let mut k = 0;
    loop {
        let finish = |outcome, termination, pt: HPoint, trace| {
            Ok(RunResult {
                outcome,
                termination,
                point: pt,
                trace,
            })
        };
        match classify(p, &pt, params.eps, params.eps_tau) {
            Outcome::Continue => {}
            Outcome::NoOptimalSolution => {
                return finish(Outcome::NoOptimalSolution, Termination::TauCollapse, pt, trace)
            }
            solved => return finish(solved, Termination::Converged, pt, trace),
        }
        if mu <= params.mu_floor {
            let outcome = floor_outcome(&pt, params);
            return finish(outcome, Termination::MuFloor, pt, trace);
        }
        if k >= params.max_iter {
            return Err(IpmError::MaxIterExceeded {
                iterations: k,
                trace: Box::new(trace),
            });
        }
        let mu_res = mu_resolution(point_scale(&pt), params.beta1);
        if mu <= 2.0 * mu_res {
            let outcome = floor_outcome(&pt, params);
            return finish(outcome, Termination::PrecisionFloor, pt, trace);
        }
        let pred = predictor_at(p, &pt, mu, params, k)?;
        let mu_next = (1.0 - pred.alpha_bar) * mu;
        let (next, dist) = if pred.alpha_bar == 1.0 {
            (pred.point.clone(), 0.0)
        } else {
            corrector_at(p, &pred.point, mu_next, params, k)?
        };
        trace.rows.push(record(p, k + 1, mu, mu_next, &pred, &next, dist));
        pt = next;
        mu = mu_next;
        k += 1;
        if pred.alpha_bar == 1.0 {
            let outcome = if pt.tau > 0.0 {
                Outcome::Solved(solution_of(&pt))
            } else {
                Outcome::NoOptimalSolution
            };
            return finish(outcome, Termination::ExactStep, pt, trace);
        }
        if stop(k, &pt) {
            return finish(Outcome::Continue, Termination::Converged, pt, trace);
        }
        if pred.at_resolution && mu > params.mu_floor {
            let outcome = floor_outcome(&pt, params);
            return finish(outcome, Termination::PrecisionFloor, pt, trace);
        }
    }
}

fn floor_outcome(pt: &HPoint, params: &Params) -> Outcome {
    if pt.tau > params.eps_tau && !tau_collapsed(pt, params.eps_tau) {
        Outcome::Solved(solution_of(pt))
    } else {
        Outcome::NoOptimalSolution
    }
}

fn record(
    p: &Lsdfp,
    k: usize,
    mu_prev: f64,
    mu: f64,
    pred: &PredictorStep,
    pt: &HPoint,
    dist: f64,
) -> IterRecord {
    let res = residuals(p, pt);
    IterRecord {
        k,
        mu,
        mu_actual: pt.mu(),
        alpha_bar: pred.alpha_bar,
        alpha1: pred.alpha1,
        alpha2: pred.alpha2,
        delta: pred.delta,
        tau: pt.tau,
        kappa: pt.kappa,
        norm_r: res.norm_r(),
        norm_s: res.norm_s(),
        gamma: res.gamma,
        nbr_dist: dist,
        pred_dist: pred.dist,
        ratio: mu / mu_prev,
        at_resolution: pred.at_resolution,
        scale: point_scale(pt),
    }
}

/// Outcome of the SDLCP-form algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HatOutcome {
    Solved,
    NoOptimalSolution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HatRunResult {
    pub outcome: HatOutcome,
    pub termination: Termination,
    pub point: HatPoint,
    pub trace: IterTrace,
}

/// Stop measures `(Tr(X̂Ŷ)/τ², ‖r/τ‖)` with `τ = X̂_{n+1,n+1}`.
pub fn hat_stop_measures(ops: &SdlcpOps, hp: &HatPoint) -> (f64, f64) {
    let tau = hp.tau();
    let r = ops.residual(hp);
    (hp.xh.dot(&hp.yh) / (tau * tau), dense::norm2(&r) / tau)
}

fn hat_classify(ops: &SdlcpOps, hp: &HatPoint, params: &Params) -> Option<HatOutcome> {
    let tau = hp.tau();
    if tau > 0.0 {
        let (g, r) = hat_stop_measures(ops, hp);
        if g.max(r) <= params.eps {
            return Some(HatOutcome::Solved);
        }
    }
    if tau <= params.eps_tau && hp.kappa() >= tau / params.eps_tau {
        return Some(HatOutcome::NoOptimalSolution);
    }
    None
}

fn hat_member_dist(hp: &HatPoint, mu: f64) -> Option<f64> {
    if !(mu > 0.0) {
        return None;
    }
    let root = psd_sqrt_tol(&hp.yh, 0.0).ok()?;
    let w = root.sqrt.congruence(&hp.xh).shift(-mu);
    Some(libm::sqrt(w.dot(&w)))
}

struct HatPredictor {
    point: HatPoint,
    alpha_bar: f64,
    delta: f64,
    alpha1: f64,
    alpha2: f64,
    dist: f64,
    at_resolution: bool,
}

/// Hat predictor; `forced` replaces the step-length rule with a given
/// `ᾱ`.
fn hat_predictor(
    ops: &SdlcpOps,
    hp: &HatPoint,
    mu: f64,
    params: &Params,
    k: usize,
    forced: Option<f64>,
) -> Result<HatPredictor, IpmError> {
    let root = interior_sqrt(&hp.yh)?;
    let w = root.sqrt.congruence(&hp.xh).shift(-mu);
    let dist = libm::sqrt(w.dot(&w));
    if forced.is_none() && !(dist <= params.beta1 * mu) {
        return Err(IpmError::NotInNeighborhood {
            k,
            dist,
            bound: params.beta1 * mu,
        });
    }
    let r = ops.residual(hp);
    let d = solve_hat_with_root(ops, hp, &root, 0.0, &r)?;
    let delta = hat_delta_with_root(&root, mu, &d);
    let a1 = alpha1(delta, params.beta1, params.beta2);
    let beta2 = params.beta2;
    let a_res = resolvable_step(mu, mu_resolution(hat_scale(hp), params.beta1));
    let (alpha_bar, a2) = match forced {
        Some(a) => (a, a),
        None => {
            let a2 = max_step_within(
                |a| {
                    let target = (1.0 - a) * mu;
                    hat_member_dist(&hat_step(hp, &d, a), target)
                        .is_some_and(|dd| dd <= beta2 * target)
                },
                a_res,
                params.bisect_tol,
            );
            if a2 < a1.min(a_res) - params.bisect_tol {
                return Err(IpmError::StepOrderViolation {
                    k,
                    alpha1: a1,
                    alpha2: a2,
                });
            }
            let ab = match params.step_rule {
                StepRule::Greedy => a2,
                StepRule::Conservative => a1.min(a2),
            };
            (ab, a2)
        }
    };
    let point = hat_step(hp, &d, alpha_bar);
    let pdist = hat_member_dist(&point, (1.0 - alpha_bar) * mu).unwrap_or(f64::INFINITY);
    let at_resolution = a_res < 1.0 && alpha_bar >= a_res - params.bisect_tol;
    Ok(HatPredictor {
        point,
        alpha_bar,
        delta,
        alpha1: a1,
        alpha2: a2,
        dist: pdist,
        at_resolution,
    })
}

fn hat_corrector(
    ops: &SdlcpOps,
    hp: &HatPoint,
    mu_plus: f64,
    params: &Params,
    k: usize,
    check: bool,
) -> Result<(HatPoint, f64), IpmError> {
    let root = interior_sqrt(&hp.yh)?;
    let zero = alloc::vec![0.0; ops.rows()];
    let d = solve_hat_with_root(ops, hp, &root, mu_plus, &zero)?;
    let next = hat_step(hp, &d, 1.0);
    let bound = params.beta1 * mu_plus;
    let dist = hat_member_dist(&next, mu_plus);
    match dist {
        Some(dd) if dd <= bound || !check => Ok((next, dd)),
        None if !check => Ok((next, f64::INFINITY)),
        other => Err(IpmError::CorrectorEscape {
            k,
            dist: other.unwrap_or(f64::INFINITY),
            bound,
        }),
    }
}

fn hat_record(
    ops: &SdlcpOps,
    k: usize,
    mu_prev: f64,
    mu: f64,
    pred: &HatPredictor,
    hp: &HatPoint,
    dist: f64,
) -> IterRecord {
    let r = ops.residual(hp);
    let split = ops.b1_row();
    IterRecord {
        k,
        mu,
        mu_actual: hp.mu(),
        alpha_bar: pred.alpha_bar,
        alpha1: pred.alpha1,
        alpha2: pred.alpha2,
        delta: pred.delta,
        tau: hp.tau(),
        kappa: hp.kappa(),
        norm_r: dense::norm2(&r[..split]),
        norm_s: dense::norm2(&r[split..]),
        gamma: r[split],
        nbr_dist: dist,
        pred_dist: pred.dist,
        ratio: mu / mu_prev,
        at_resolution: pred.at_resolution,
        scale: hat_scale(hp),
    }
}

/// Runs the SDLCP-form algorithm from `start ∈ N₁(β₁, μ̂₀)`. In the trace
/// `norm_r` covers the `Â` rows of the residual, `norm_s` the `B̂` rows and
/// `gamma` the `(B_1, d_1)` row.
pub fn run_sdlcp(ops: &SdlcpOps, start: &HatPoint, params: &Params) -> Result<HatRunResult, IpmError> {
    params.validate()?;
    let mut hp = start.clone();
    let mut mu = hp.mu();
    let mut trace = IterTrace {
        mu0: mu,
        rows: Vec::new(),
    };
    let mut k = 0;
    loop {
        if let Some(outcome) = hat_classify(ops, &hp, params) {
            let termination = match outcome {
                HatOutcome::Solved => Termination::Converged,
                HatOutcome::NoOptimalSolution => Termination::TauCollapse,
            };
            return Ok(HatRunResult {
                outcome,
                termination,
                point: hp,
                trace,
            });
        }
        if mu <= params.mu_floor {
            return Ok(HatRunResult {
                outcome: hat_floor_outcome(&hp, params),
                termination: Termination::MuFloor,
                point: hp,
                trace,
            });
        }
        if k >= params.max_iter {
            return Err(IpmError::MaxIterExceeded {
                iterations: k,
                trace: Box::new(trace),
            });
        }
        if mu <= 2.0 * mu_resolution(hat_scale(&hp), params.beta1) {
            return Ok(HatRunResult {
                outcome: hat_floor_outcome(&hp, params),
                termination: Termination::PrecisionFloor,
                point: hp,
                trace,
            });
        }
        let pred = hat_predictor(ops, &hp, mu, params, k, None)?;
        let mu_next = (1.0 - pred.alpha_bar) * mu;
        if pred.alpha_bar == 1.0 {
            trace
                .rows
                .push(hat_record(ops, k + 1, mu, 0.0, &pred, &pred.point, 0.0));
            return Ok(HatRunResult {
                outcome: HatOutcome::Solved,
                termination: Termination::ExactStep,
                point: pred.point,
                trace,
            });
        }
        let (next, dist) = hat_corrector(ops, &pred.point, mu_next, params, k, true)?;
        trace
            .rows
            .push(hat_record(ops, k + 1, mu, mu_next, &pred, &next, dist));
        hp = next;
        mu = mu_next;
        k += 1;
        if pred.at_resolution && mu > params.mu_floor {
            return Ok(HatRunResult {
                outcome: hat_floor_outcome(&hp, params),
                termination: Termination::PrecisionFloor,
                point: hp,
                trace,
            });
        }
    }
}

fn hat_floor_outcome(hp: &HatPoint, params: &Params) -> HatOutcome {
    let (tau, kappa) = (hp.tau(), hp.kappa());
    if tau > params.eps_tau && !(tau <= params.eps_tau && kappa >= tau / params.eps_tau) {
        HatOutcome::Solved
    } else {
        HatOutcome::NoOptimalSolution
    }
}

/// Per-iteration comparison of the two algorithms.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceRow {
    pub k: usize,
    /// Relative Frobenius deviation of `X̂_k, Ŷ_k` from the embedded
    /// homogeneous iterate (largest of the two).
    pub block_dev: f64,
    /// The same after scaling every block to unit norm. The homogeneous
    /// model is invariant under `(X, τ) → t(X, τ)`, `(y, Y, κ) → (y, Y, κ)/t`
    /// and its Newton systems lose conditioning along that ray as `μ → 0`,
    /// so this part of the deviation stays small when `block_dev` grows.
    pub ray_dev: f64,
    /// `|μ̂_k − μ_k| / μ_k`, both recomputed from the iterates.
    pub mu_dev: f64,
    pub mu: f64,
    pub mu_hat: f64,
    /// [`IterRecord::scale`] of the homogeneous iterate.
    pub scale: f64,
}

impl EquivalenceRow {
    pub fn within(&self) -> bool {
        self.block_dev <= EQUIV_BLOCK_TOL && self.mu_dev <= EQUIV_MU_TOL
    }

    /// The deviation is no larger than rounding of the iterates can cause:
    /// `|μ̂ − μ|` within the resolution of `μ` and the block deviation
    /// within that resolution amplified by the `scale/μ` conditioning of
    /// the Newton systems.
    pub fn within_rounding(&self) -> bool {
        let band = RESOLUTION_FACTOR * f64::EPSILON * self.scale;
        self.mu > 0.0 && self.block_dev <= band / self.mu && (self.mu_hat - self.mu).abs() <= band
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub rows: Vec<EquivalenceRow>,
}

impl EquivalenceReport {
    pub fn max_block_dev(&self) -> f64 {
        self.rows.iter().map(|r| r.block_dev).fold(0.0, f64::max)
    }

    pub fn max_ray_dev(&self) -> f64 {
        self.rows.iter().map(|r| r.ray_dev).fold(0.0, f64::max)
    }

    pub fn max_mu_dev(&self) -> f64 {
        self.rows.iter().map(|r| r.mu_dev).fold(0.0, f64::max)
    }

    pub fn first_violation(&self) -> Option<&EquivalenceRow> {
        self.rows.iter().find(|r| !r.within())
    }

    /// First row over tolerance that rounding does not account for.
    pub fn first_unexplained(&self) -> Option<&EquivalenceRow> {
        self.rows.iter().find(|r| !r.within() && !r.within_rounding())
    }
}

pub const EQUIV_BLOCK_TOL: f64 = 1e-8;
pub const EQUIV_MU_TOL: f64 = 1e-10;

fn rel_dev(a: &SymMat, b: &SymMat) -> f64 {
    a.sub(b).frobenius_norm() / a.frobenius_norm().max(b.frobenius_norm()).max(f64::MIN_POSITIVE)
}

fn unit(a: &SymMat) -> SymMat {
    let n = a.frobenius_norm();
    if n > 0.0 {
        a.scale(1.0 / n)
    } else {
        a.clone()
    }
}

/// Runs both algorithms in lockstep for up to `k_max` iterations, the
/// SDLCP run taking the same `ᾱ` as the homogeneous run, and checks that
/// `X̂_k = blkdiag(X_k, τ_k)`, `Ŷ_k = blkdiag(Y_k, κ_k)` and `μ̂_k = μ_k`.
pub fn check_equivalence(
    p: &Lsdfp,
    ops: &SdlcpOps,
    start: &HPoint,
    params: &Params,
    k_max: usize,
) -> Result<EquivalenceReport, IpmError> {
    let report = equivalence_trace(p, ops, start, params, k_max)?;
    match report.first_violation() {
        Some(row) => Err(IpmError::EquivalenceViolation {
            k: row.k,
            block_dev: row.block_dev,
            mu_dev: row.mu_dev,
        }),
        None => Ok(report),
    }
}

/// The lockstep comparison of [`check_equivalence`] without the verdict.
/// A failure of the SDLCP iteration ends the trace with an infinite
/// deviation row.
pub fn equivalence_trace(
    p: &Lsdfp,
    ops: &SdlcpOps,
    start: &HPoint,
    params: &Params,
    k_max: usize,
) -> Result<EquivalenceReport, IpmError> {
    params.validate()?;
    let mut pt = start.clone();
    let mut hp = embed(start);
    let mut mu = pt.mu();
    let mut rows = Vec::new();
    for k in 0..=k_max {
        let emb = embed(&pt);
        let block_dev = rel_dev(&hp.xh, &emb.xh).max(rel_dev(&hp.yh, &emb.yh));
        let ray_dev = rel_dev(&unit(&hp.xh), &unit(&emb.xh)).max(rel_dev(&unit(&hp.yh), &unit(&emb.yh)));
        let (mu_k, mu_hat) = (pt.mu(), hp.mu());
        rows.push(EquivalenceRow {
            k,
            block_dev,
            ray_dev,
            mu_dev: (mu_hat - mu_k).abs() / mu_k,
            mu: mu_k,
            mu_hat,
            scale: point_scale(&pt),
        });
        if k == k_max
            || !matches!(classify(p, &pt, params.eps, params.eps_tau), Outcome::Continue)
            || mu <= params.mu_floor
            || mu <= 2.0 * mu_resolution(point_scale(&pt), params.beta1)
        {
            break;
        }
        let pred = predictor_at(p, &pt, mu, params, k)?;
        if pred.alpha_bar == 1.0 {
            break;
        }
        let mu_next = (1.0 - pred.alpha_bar) * mu;
        let (next, _) = corrector_at(p, &pred.point, mu_next, params, k)?;
        let hat_next = hat_predictor(ops, &hp, mu, params, k, Some(pred.alpha_bar))
            .and_then(|h| hat_corrector(ops, &h.point, mu_next, params, k, false));
        match hat_next {
            Ok((h, _)) => hp = h,
            Err(_) => {
                rows.push(EquivalenceRow {
                    k: k + 1,
                    block_dev: f64::INFINITY,
                    ray_dev: f64::INFINITY,
                    mu_dev: f64::INFINITY,
                    mu: next.mu(),
                    mu_hat: f64::NAN,
                    scale: point_scale(&next),
                });
                break;
            }
        }
        pt = next;
        mu = mu_next;
    }
    Ok(EquivalenceReport { rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuperlinearReport {
    pub tail_ratios: Vec<f64>,
    /// Tail ratios strictly decreasing.
    pub monotone_decreasing: bool,
    pub final_ratio: f64,
    /// Least-squares slope of `log μ_{k+1}` against `log μ_k` over the tail.
    pub q_order: Option<f64>,
}

/// Summarizes the last `tail` ratios `μ_{k+1}/μ_k` of a trace.
pub fn superlinear_report(trace: &IterTrace, tail: usize) -> Result<SuperlinearReport, IpmError> {
    let need = tail + 1;
    if tail == 0 || trace.len() < need {
        return Err(IpmError::InsufficientTrace {
            have: trace.len(),
            need,
        });
    }
    let rows = &trace.rows[trace.len() - tail..];
    let tail_ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let monotone_decreasing = tail_ratios.windows(2).all(|w| w[1] < w[0]);
    let final_ratio = *tail_ratios.last().expect("tail is nonempty");
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.mu > 0.0 && r.ratio > 0.0)
        .map(|r| (libm::log(r.mu / r.ratio), libm::log(r.mu)))
        .collect();
    Ok(SuperlinearReport {
        tail_ratios,
        monotone_decreasing,
        final_ratio,
        q_order: slope(&pts),
    })
}

fn slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_params_valid() {
        Params::default().validate().unwrap();
    }

    #[test]
    fn bad_params_rejected() {
        let p = Params {
            beta1: 0.05,
            ..Params::default()
        };
        assert!(p.validate().is_err());
        let p = Params {
            beta2: 0.6,
            beta1: 0.5,
            ..Params::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn alpha1_closed_forms() {
        assert_eq!(alpha1(0.0, 0.1, 0.3), 1.0);
        assert!((alpha1(0.4, 0.1, 0.3) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn max_step_finds_interval_end() {
        let a = max_step(|a| a <= 0.37, 1e-12);
        assert!((a - 0.37).abs() < 1e-11);
        assert_eq!(max_step(|_| true, 1e-12), 1.0);
    }

    #[test]
    fn max_step_honors_interior_gap() {
        // member on [0, 0.2] and [0.3, 0.9]: the bisection may land in the
        // second piece, the sample check must pull it back
        let a = max_step(|a| a <= 0.2 || (0.3..=0.9).contains(&a), 1e-12);
        assert!(a <= 0.2 + 1e-11);
    }

    fn trace_with(ratios: &[f64]) -> IterTrace {
        let mut mu = 1.0;
        let rows = ratios
            .iter()
            .enumerate()
            .map(|(k, &r)| {
                mu *= r;
                IterRecord {
                    k: k + 1,
                    mu,
                    mu_actual: mu,
                    alpha_bar: 1.0 - r,
                    alpha1: 0.0,
                    alpha2: 1.0 - r,
                    delta: 0.0,
                    tau: 1.0,
                    kappa: mu,
                    norm_r: 0.0,
                    norm_s: 0.0,
                    gamma: 0.0,
                    nbr_dist: 0.0,
                    pred_dist: 0.0,
                    ratio: r,
                    at_resolution: false,
                    scale: 1.0,
                }
            })
            .collect();
        IterTrace { mu0: 1.0, rows }
    }

    #[test]
    fn superlinear_readout() {
        let rep = superlinear_report(&trace_with(&[0.5, 0.2, 0.04, 0.002]), 3).unwrap();
        assert!(rep.monotone_decreasing);
        assert_eq!(rep.final_ratio, 0.002);
        let rep = superlinear_report(&trace_with(&[0.5, 0.5, 0.5]), 2).unwrap();
        assert!(!rep.monotone_decreasing);
        assert!((rep.q_order.unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            superlinear_report(&trace_with(&[0.5]), 3),
            Err(IpmError::InsufficientTrace { .. })
        ));
    }
}
