use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sdfp_core::embed::{gap_identity_defect, residuals, Outcome};
use sdfp_core::ipm::{self, superlinear_report, IterRecord, IterTrace, Params, Termination};
use sdfp_core::phase1::{cold_start, find_dual_interior, warm_start, DEFAULT_MARGIN};
use sdfp_core::problem::{from_lmi, generate, tau_collapse_instance, validate, Lmi};
use sdfp_core::sdlcp::{check_b1_22, check_solution_correspondence, embed, SdlcpOps};
use sdfp_core::{IpmError, Lsdfp, ProblemError, SymMat};

fn solved(outcome: &Outcome) -> &sdfp_core::Solution {
    match outcome {
        Outcome::Solved(sol) => sol,
        other => panic!("expected a solution, got {other:?}"),
    }
}

#[test]
fn generated_instance_is_solved() {
    let (p, _) = generate(5, 4, 2, 7).unwrap();
    let start = warm_start(&p, 1.0).unwrap();
    let res = ipm::run(&p, &start, &Params::default()).unwrap();
    let sol = solved(&res.outcome);
    let ax = p.apply_a(&sol.x);
    for (a, b) in ax.iter().zip(p.b()) {
        assert!((a - b).abs() <= 1e-6, "{a} vs {b}");
    }
    assert!(sol.x.min_eigenvalue() >= -1e-8);
    assert!(res.trace.len() <= 30);
}

#[test]
fn generated_witness_holds() {
    for seed in 0..10 {
        let (p, w) = generate(3 + seed as usize % 4, 2 + seed as usize % 3, 1 + seed as usize % 2, seed).unwrap();
        assert!(validate(&p).is_valid());
        let tol = 1e-10 * p.scale().max(1.0) * (1.0 + w.x_star.frobenius_norm()) * (1.0 + w.z_star.frobenius_norm());
        let d = w.defects(&p);
        assert!(d.holds(tol), "seed {seed}: {d:?}");
        assert!(d.min_eig_sum > 0.0);
    }
}

#[test]
fn generation_is_deterministic() {
    assert_eq!(generate(5, 4, 2, 7).unwrap(), generate(5, 4, 2, 7).unwrap());
    assert_ne!(generate(5, 4, 2, 7).unwrap().0, generate(5, 4, 2, 8).unwrap().0);
}

#[test]
fn generator_rejects_bad_rank() {
    assert!(matches!(generate(4, 3, 4, 0), Err(ProblemError::InvalidArguments(_))));
    assert!(matches!(generate(4, 3, 0, 0), Err(ProblemError::InvalidArguments(_))));
}

#[test]
fn runs_are_deterministic() {
    let (p, _) = generate(4, 3, 2, 11).unwrap();
    let start = warm_start(&p, 1.0).unwrap();
    let a = ipm::run(&p, &start, &Params::default()).unwrap();
    let b = ipm::run(&p, &start, &Params::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn zero_iteration_budget_returns_empty_trace() {
    let (p, _) = generate(4, 3, 2, 1).unwrap();
    let start = warm_start(&p, 1.0).unwrap();
    let params = Params {
        max_iter: 0,
        ..Params::default()
    };
    match ipm::run(&p, &start, &params) {
        Err(IpmError::MaxIterExceeded { iterations, trace }) => {
            assert_eq!(iterations, 0);
            assert!(trace.is_empty());
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn cold_start_also_converges() {
    let (p, _) = generate(4, 5, 2, 3).unwrap();
    let res = ipm::run(&p, &cold_start(&p, 1.0), &Params::default()).unwrap();
    solved(&res.outcome);
}

#[test]
fn tau_collapse_gives_no_solution() {
    let p = Lsdfp::new(3, vec![SymMat::identity(3)], vec![-1.0]).unwrap();
    let res = ipm::run(&p, &cold_start(&p, 1.0), &Params::default()).unwrap();
    assert_eq!(res.outcome, Outcome::NoOptimalSolution);
    assert!(res.point.tau <= 1e-8);

    let p = tau_collapse_instance(4, 3, 5).unwrap();
    let start = warm_start(&p, 1.0).unwrap_or_else(|_| cold_start(&p, 1.0));
    let res = ipm::run(&p, &start, &Params::default()).unwrap();
    assert_eq!(res.outcome, Outcome::NoOptimalSolution);
}

#[test]
fn iterates_keep_the_gap_identity() {
    let (p, _) = generate(5, 6, 2, 21).unwrap();
    let start = warm_start(&p, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    ipm::run_with(&p, &start, &Params::default(), |_, pt| {
        worst = worst.max(gap_identity_defect(&p, pt));
        false
    })
    .unwrap();
    assert!(worst <= 1e-9, "{worst}");
    // the warm start is dual feasible, so s stays zero along the run
    let res = ipm::run(&p, &start, &Params::default()).unwrap();
    assert!(residuals(&p, &res.point).norm_s() <= 1e-9);
}

#[test]
fn sdlcp_run_matches_the_direct_run() {
    let (p, _) = generate(4, 4, 2, 9).unwrap();
    let start = warm_start(&p, 1.0).unwrap();
    let (_, ops) = SdlcpOps::build(&p).unwrap();
    let params = Params::default();
    let direct = ipm::run(&p, &start, &params).unwrap();
    let hat = ipm::run_sdlcp(&ops, &embed(&start), &params).unwrap();
    assert_eq!(direct.trace.len(), hat.trace.len());
    // independent runs choose their own steps; near the solution the
    // Newton systems amplify rounding, so compare the well-conditioned part
    for (a, b) in direct.trace.rows.iter().zip(&hat.trace.rows).filter(|(a, _)| a.mu >= 1e-6) {
        assert!((a.mu - b.mu).abs() <= 1e-8 * a.mu.max(1e-12), "k={}: {} vs {}", a.k, a.mu, b.mu);
    }
}

#[test]
fn equivalence_holds_early_and_fault_is_caught() {
    let (p, _) = generate(4, 4, 2, 9).unwrap();
    let start = warm_start(&p, 1.0).unwrap();
    let (_, mut ops) = SdlcpOps::build(&p).unwrap();
    let params = Params::default();
    ipm::check_equivalence(&p, &ops, &start, &params, 3).unwrap();
    assert!(ipm::check_equivalence(&p, &ops, &start, &params, 0).is_ok());
    ops.inject_fault(1e-3);
    assert!(matches!(
        ipm::check_equivalence(&p, &ops, &start, &params, 3),
        Err(IpmError::EquivalenceViolation { .. })
    ));
}

#[test]
fn witness_checks_pass_on_generated_instances() {
    for seed in 0..5 {
        let (p, w) = generate(5, 5, 2, 100 + seed).unwrap();
        let (basis, ops) = SdlcpOps::build(&p).unwrap();
        assert!(check_b1_22(&basis, &w, seed).unwrap().passed());
        let rep = check_solution_correspondence(&p, &ops, &w).unwrap();
        assert!(rep.passed(), "{rep:?}");
    }
}

#[test]
fn phase1_finds_interior_dual_point() {
    let (p, _) = generate(6, 5, 3, 4).unwrap();
    let (y, z) = find_dual_interior(&p, DEFAULT_MARGIN).unwrap();
    assert!(p.apply_at(&y).add(&z).frobenius_norm() <= 1e-12 * p.scale());
    assert!(z.min_eigenvalue() >= DEFAULT_MARGIN * z.frobenius_norm());
    assert!((z.trace() - 6.0).abs() <= 1e-12);
}

#[test]
fn lmi_hand_example() {
    let lmi = Lmi {
        b0: SymMat::from_diag(&[1.0, 0.0]),
        bs: vec![SymMat::from_diag(&[0.0, 1.0])],
    };
    let (p, map) = from_lmi(&lmi).unwrap();
    assert_eq!(p.m(), 2);
    let z = map.recover(&SymMat::from_diag(&[1.0, 0.7]));
    assert!((z[0] - 0.7).abs() < 1e-14);
    assert_eq!(from_lmi(&Lmi { b0: SymMat::zeros(2), bs: lmi.bs.clone() }).unwrap_err(), ProblemError::ZeroRhs);
}

#[test]
fn lmi_solution_recovers_feasible_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (n, l) = (4, 2);
    let bs: Vec<SymMat> = (0..l)
        .map(|_| SymMat::from_lower_fn(n, |_, _| rng.gen_range(-1.0..1.0)))
        .collect();
    let z0: Vec<f64> = (0..l).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut b0 = SymMat::identity(n);
    for (bj, zj) in bs.iter().zip(&z0) {
        b0 = b0.axpy(-zj, bj);
    }
    let lmi = Lmi { b0, bs };
    let (p, map) = from_lmi(&lmi).unwrap();
    let start = warm_start(&p, 1.0).unwrap_or_else(|_| cold_start(&p, 1.0));
    let res = ipm::run(&p, &start, &Params::default()).unwrap();
    let z = map.recover(&solved(&res.outcome).x);
    assert!(lmi.evaluate(&z).min_eigenvalue() >= -1e-8);
}

fn synthetic(ratios: &[f64]) -> IterTrace {
    let mut mu = 1.0;
    let rows = ratios
        .iter()
        .enumerate()
        .map(|(k, &ratio)| {
            mu *= ratio;
            IterRecord {
                k: k + 1,
                mu,
                mu_actual: mu,
                alpha_bar: 1.0 - ratio,
                alpha1: 0.0,
                alpha2: 0.0,
                delta: 0.0,
                tau: 1.0,
                kappa: mu,
                norm_r: 0.0,
                norm_s: 0.0,
                gamma: 0.0,
                nbr_dist: 0.0,
                pred_dist: 0.0,
                ratio,
                at_resolution: false,
                scale: 1.0,
            }
        })
        .collect();
    IterTrace { mu0: 1.0, rows }
}

#[test]
fn superlinear_report_reads_the_tail() {
    let rep = superlinear_report(&synthetic(&[0.5, 0.2, 0.04, 0.002]), 3).unwrap();
    assert!(rep.monotone_decreasing);
    assert_eq!(rep.final_ratio, 0.002);
    assert!(rep.q_order.unwrap() > 1.0);

    let rep = superlinear_report(&synthetic(&[0.5, 0.5, 0.5, 0.5]), 3).unwrap();
    assert!(!rep.monotone_decreasing);
    assert!((rep.q_order.unwrap() - 1.0).abs() < 1e-12);

    assert!(matches!(
        superlinear_report(&synthetic(&[0.5, 0.5]), 3),
        Err(IpmError::InsufficientTrace { have: 2, need: 4 })
    ));
}

#[test]
fn termination_is_reported() {
    let (p, _) = generate(4, 3, 1, 2).unwrap();
    let res = ipm::run(&p, &warm_start(&p, 1.0).unwrap(), &Params::default()).unwrap();
    assert_eq!(res.termination, Termination::Converged);
}
