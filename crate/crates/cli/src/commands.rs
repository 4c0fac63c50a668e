use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::thread;

use sdfp_core::embed::Outcome;
use sdfp_core::ipm::{self, IterTrace, Params, RunResult, SuperlinearReport, Termination};
use sdfp_core::phase1::{centered_start, cold_start, find_dual_interior_with, DEFAULT_MARGIN};
use sdfp_core::problem::{generate, validate};
use sdfp_core::sdlcp::{build_orth_basis, check_b1_22, check_monotone_surjective, check_solution_correspondence, SdlcpOps};
use sdfp_core::{HPoint, IpmError, Lsdfp, Phase1Error};

use crate::error::{phase1_exit, CliError, Exit};
use crate::formats::{self, InputFormat, ProblemFormat, SolutionFile};

/// Ratio threshold for calling a tail superlinear.
pub const SUPERLINEAR_FINAL_RATIO: f64 = 0.05;

/// Text for stdout plus the exit status.
#[derive(Debug)]
pub struct Report {
    pub text: String,
    pub exit: Exit,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub cold: bool,
    pub params: Params,
    pub mu0: f64,
    pub format: ProblemFormat,
    pub out_dir: Option<PathBuf>,
    pub tail: usize,
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "problem".into())
}

fn outputs(path: &Path, out_dir: Option<&Path>) -> (PathBuf, PathBuf) {
    let dir = out_dir
        .map(Path::to_path_buf)
        .unwrap_or_else(|| path.parent().map(Path::to_path_buf).unwrap_or_default());
    let s = stem(path);
    (dir.join(format!("{s}.solution.json")), dir.join(format!("{s}.trace.csv")))
}

fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::Converged => "converged",
        Termination::TauCollapse => "tau_collapse",
        Termination::MuFloor => "mu_floor",
        Termination::ExactStep => "exact_step",
        Termination::PrecisionFloor => "precision_floor",
    }
}

fn status_name(exit: Exit) -> &'static str {
    match exit {
        Exit::Solved => "solved",
        Exit::Input => "invalid_input",
        Exit::NoOptimalSolution => "no_optimal_solution",
        Exit::NotStrictlyFeasible => "not_strictly_feasible",
        Exit::Breach => "numerical_breach",
    }
}

fn empty_solution(exit: Exit, message: String, trace: Option<&IterTrace>) -> SolutionFile {
    SolutionFile {
        status: status_name(exit).into(),
        termination: None,
        x: None,
        y: None,
        z: None,
        tau: None,
        kappa: None,
        iters: trace.map_or(0, IterTrace::len),
        final_mu: trace.map(IterTrace::final_mu),
        final_ratio: trace.and_then(|t| t.rows.last()).map(|r| r.ratio),
        message: Some(message),
    }
}

fn start_point(p: &Lsdfp, opts: &SolveOptions) -> Result<HPoint, Phase1Error> {
    if opts.cold {
        return Ok(cold_start(p, opts.mu0.sqrt()));
    }
    let (y0, z0) = find_dual_interior_with(p, DEFAULT_MARGIN, &opts.params)?;
    centered_start(p, &y0, &z0, opts.mu0)
}

pub fn tail_summary(rep: &SuperlinearReport) -> String {
    let ratios: Vec<String> = rep.tail_ratios.iter().map(|r| format!("{r:.3e}")).collect();
    let verdict = if rep.monotone_decreasing && rep.final_ratio <= SUPERLINEAR_FINAL_RATIO {
        "superlinear tail"
    } else {
        "no superlinear tail"
    };
    format!(
        "tail ratios [{}], {}, final ratio {:.3e}, q-order {}: {verdict}",
        ratios.join(", "),
        if rep.monotone_decreasing { "strictly decreasing" } else { "not decreasing" },
        rep.final_ratio,
        rep.q_order.map_or("n/a".to_string(), |q| format!("{q:.3}")),
    )
}

fn solve_one(path: &Path, opts: &SolveOptions) -> Report {
    match solve_inner(path, opts) {
        Ok(r) => r,
        Err(e) => Report {
            text: format!("{}: error: {e}\n", path.display()),
            exit: e.exit(),
        },
    }
}

fn solve_inner(path: &Path, opts: &SolveOptions) -> Result<Report, CliError> {
    let p = formats::read_problem(path, opts.format)?;
    validate(&p).into_result()?;
    let (sol_path, trace_path) = outputs(path, opts.out_dir.as_deref());
    if let Some(dir) = sol_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let name = path.display();

    let start = match start_point(&p, opts) {
        Ok(s) => s,
        Err(e) => {
            let exit = phase1_exit(&e);
            formats::write_solution(&sol_path, &empty_solution(exit, e.to_string(), None))?;
            return Ok(Report {
                text: format!("{name}: {} ({e})\n", status_name(exit)),
                exit,
            });
        }
    };

    let res: RunResult = match ipm::run(&p, &start, &opts.params) {
        Ok(res) => res,
        Err(e) => {
            let trace = match &e {
                IpmError::MaxIterExceeded { trace, .. } => Some(trace.as_ref()),
                _ => None,
            };
            if let Some(t) = trace {
                formats::write_trace(&trace_path, t)?;
            }
            formats::write_solution(&sol_path, &empty_solution(Exit::Breach, e.to_string(), trace))?;
            return Ok(Report {
                text: format!("{name}: numerical_breach ({e})\n"),
                exit: Exit::Breach,
            });
        }
    };
    formats::write_trace(&trace_path, &res.trace)?;

    let exit = match res.outcome {
        Outcome::Solved(_) => Exit::Solved,
        Outcome::NoOptimalSolution => Exit::NoOptimalSolution,
        Outcome::Continue => Exit::Breach,
    };
    let last = res.trace.rows.last();
    let mut sol = SolutionFile {
        status: status_name(exit).into(),
        termination: Some(termination_name(res.termination).into()),
        x: None,
        y: None,
        z: None,
        tau: Some(res.point.tau),
        kappa: Some(res.point.kappa),
        iters: res.trace.len(),
        final_mu: Some(res.trace.final_mu()),
        final_ratio: last.map(|r| r.ratio),
        message: None,
    };
    if let Outcome::Solved(s) = &res.outcome {
        sol.x = Some(s.x.as_row_major().to_vec());
        sol.y = Some(s.y.clone());
        sol.z = Some(s.z.as_row_major().to_vec());
    }
    formats::write_solution(&sol_path, &sol)?;

    let mut text = format!(
        "{name}: {} ({}) after {} iterations, mu {:.3e}, tau {:.3e}, kappa {:.3e}, final ratio {}\n",
        sol.status,
        termination_name(res.termination),
        res.trace.len(),
        res.trace.final_mu(),
        res.point.tau,
        res.point.kappa,
        last.map_or("n/a".into(), |r| format!("{:.3e}", r.ratio)),
    );
    match ipm::superlinear_report(&res.trace, opts.tail) {
        Ok(rep) => writeln!(text, "  {}", tail_summary(&rep)).unwrap(),
        Err(e) => writeln!(text, "  no tail summary: {e}").unwrap(),
    }
    Ok(Report { text, exit })
}

/// Solves each file on its own thread. The exit status is the largest
/// over the files.
pub fn solve(paths: &[PathBuf], opts: &SolveOptions) -> Report {
    if let Err(e) = opts.params.validate() {
        return Report {
            text: format!("error: {e}\n"),
            exit: Exit::Input,
        };
    }
    let reports: Vec<Report> = thread::scope(|s| {
        let handles: Vec<_> = paths.iter().map(|p| s.spawn(move || solve_one(p, opts))).collect();
        handles.into_iter().map(|h| h.join().expect("solver thread panicked")).collect()
    });
    Report {
        text: reports.iter().map(|r| r.text.as_str()).collect(),
        exit: reports.iter().map(|r| r.exit).max().unwrap_or(Exit::Solved),
    }
}

pub fn generate_cmd(n: usize, m: usize, r: usize, seed: u64, out: &Path) -> Result<Report, CliError> {
    let (p, w) = generate(n, m, r, seed)?;
    let wpath = formats::witness_path(out);
    formats::write_problem(out, &p)?;
    formats::write_witness(&wpath, &w)?;
    Ok(Report {
        text: format!("wrote {} and {}\n", out.display(), wpath.display()),
        exit: Exit::Solved,
    })
}

pub fn convert(input: &Path, from: InputFormat, out: &Path) -> Result<Report, CliError> {
    let p = formats::read_input(input, from)?;
    formats::write_problem(out, &p)?;
    Ok(Report {
        text: format!("wrote {} (n = {}, m = {})\n", out.display(), p.n(), p.m()),
        exit: Exit::Solved,
    })
}

enum Check {
    Pass(String),
    Fail(String),
    Skipped(&'static str),
}

fn check(ok: bool, detail: String) -> Check {
    if ok {
        Check::Pass(detail)
    } else {
        Check::Fail(detail)
    }
}

const CHECK_TOL: f64 = 1e-10;

pub fn verify(path: &Path, format: ProblemFormat, witness: Option<&Path>, trials: usize, seed: u64) -> Result<Report, CliError> {
    let p = formats::read_problem(path, format)?;
    let mut rows: Vec<(&str, Check)> = Vec::new();

    let v = validate(&p);
    let rank_ok = v.rank == p.m();
    rows.push(("constraint rank", check(rank_ok, format!("rank {} of m = {}", v.rank, p.m()))));
    rows.push(("nonzero b", check(v.b_nonzero, format!("|b| = {:.3e}", sdfp_core::dense::norm2(p.b())))));

    let wpath = witness.map(Path::to_path_buf).unwrap_or_else(|| formats::witness_path(path));
    let w = if wpath.exists() {
        Some(formats::read_witness(&wpath, &p)?)
    } else {
        None
    };

    if !v.is_valid() {
        for name in ["orthogonal basis", "monotonicity", "surjectivity", "witness invariants", "B1 (2,2) block", "solution correspondence"] {
            rows.push((name, Check::Skipped("invalid instance")));
        }
    } else {
        let basis = build_orth_basis(&p)?;
        let defect = basis.orthogonality_defect(&p);
        rows.push((
            "orthogonal basis",
            check(defect <= CHECK_TOL && basis.rank() == basis.len(), format!("{} matrices, defect {defect:.3e}", basis.len())),
        ));
        let ops = SdlcpOps::new(&p, &basis);
        let mono = check_monotone_surjective(&ops, trials, seed);
        rows.push((
            "monotonicity",
            check(
                mono.monotone() && mono.trace_vanishes() && mono.zero_is_solution,
                format!("{} samples, max |Tr(XY)|/scale {:.3e}", mono.trials, mono.max_rel_trace),
            ),
        ));
        rows.push(("surjectivity", check(mono.surjective(), format!("rank {} of {}", mono.rank, mono.rows))));
        match &w {
            None => {
                for name in ["witness invariants", "B1 (2,2) block", "solution correspondence"] {
                    rows.push((name, Check::Skipped("no witness")));
                }
            }
            Some(w) => {
                let d = w.defects(&p);
                let tol = CHECK_TOL * p.scale() * (1.0 + w.x_star.frobenius_norm()) * (1.0 + w.z_star.frobenius_norm());
                rows.push((
                    "witness invariants",
                    check(
                        d.holds(tol),
                        format!(
                            "primal {:.1e}, dual {:.1e}, XY {:.1e}, b.y {:.1e}, min eig(X+Y) {:.3e}",
                            d.primal, d.dual, d.complementarity, d.b_dot_y, d.min_eig_sum
                        ),
                    ),
                ));
                let b122 = check_b1_22(&basis, w, seed);
                rows.push((
                    "B1 (2,2) block",
                    match b122 {
                        Ok(c) => check(
                            c.passed(),
                            format!(
                                "norm {:.3e}{}",
                                c.norm,
                                if c.original_ok { "" } else { ", adjusted basis" }
                            ),
                        ),
                        Err(e) => Check::Fail(e.to_string()),
                    },
                ));
                rows.push((
                    "solution correspondence",
                    match check_solution_correspondence(&p, &ops, w) {
                        Ok(c) => check(
                            c.passed(),
                            format!(
                                "forward {:.1e}, complementarity {:.1e}, backward {:.1e}",
                                c.forward_residual, c.forward_complementarity, c.backward_residual
                            ),
                        ),
                        Err(e) => Check::Fail(e.to_string()),
                    },
                ));
            }
        }
    }

    let mut text = format!("{}: n = {}, m = {}\n", path.display(), p.n(), p.m());
    let mut failed = 0;
    for (name, c) in &rows {
        let (tag, detail) = match c {
            Check::Pass(d) => ("pass", d.as_str()),
            Check::Fail(d) => {
                failed += 1;
                ("FAIL", d.as_str())
            }
            Check::Skipped(why) => ("skipped", *why),
        };
        writeln!(text, "  {name:<24} {tag:<8} {detail}").unwrap();
    }
    Ok(Report {
        text,
        exit: if failed == 0 { Exit::Solved } else { Exit::Breach },
    })
}

#[derive(Debug, Clone)]
pub struct CompareOptions {
    pub k_max: usize,
    pub cold: bool,
    pub strict: bool,
    pub format: ProblemFormat,
    pub params: Params,
    pub inject_fault: Option<f64>,
}

pub fn compare(path: &Path, opts: &CompareOptions) -> Result<Report, CliError> {
    let p = formats::read_problem(path, opts.format)?;
    validate(&p).into_result()?;
    let start = if opts.cold {
        cold_start(&p, 1.0)
    } else {
        let (y0, z0) = find_dual_interior_with(&p, DEFAULT_MARGIN, &opts.params)?;
        centered_start(&p, &y0, &z0, 1.0)?
    };
    let (_, mut ops) = SdlcpOps::build(&p)?;
    if let Some(mag) = opts.inject_fault {
        ops.inject_fault(mag);
    }
    let rep = ipm::equivalence_trace(&p, &ops, &start, &opts.params, opts.k_max)?;
    let mut text = format!(
        "{}: lockstep comparison over {} iterations\n{:>3}  {:>10}  {:>10}  {:>9}  {:>9}  {:>9}  status\n",
        path.display(),
        rep.rows.len(),
        "k",
        "mu",
        "mu_hat",
        "block_dev",
        "ray_dev",
        "mu_dev"
    );
    let mut failed = false;
    for r in &rep.rows {
        let status = if r.within() {
            "ok"
        } else if r.within_rounding() && !opts.strict {
            "rounding"
        } else {
            failed = true;
            "FAIL"
        };
        writeln!(
            text,
            "{:>3}  {:>10.3e}  {:>10.3e}  {:>9.2e}  {:>9.2e}  {:>9.2e}  {status}",
            r.k, r.mu, r.mu_hat, r.block_dev, r.ray_dev, r.mu_dev
        )
        .unwrap();
    }
    writeln!(
        text,
        "max block deviation {:.3e}, max mu deviation {:.3e}: {}",
        rep.max_block_dev(),
        rep.max_mu_dev(),
        if failed { "equivalence violated" } else { "equivalent" }
    )
    .unwrap();
    Ok(Report {
        text,
        exit: if failed { Exit::Breach } else { Exit::Solved },
    })
}

/// Ratios recomputed from the `mu` column; the first comes from the file.
fn recomputed(trace: &IterTrace) -> Vec<f64> {
    let mut out = Vec::with_capacity(trace.len());
    for (i, r) in trace.rows.iter().enumerate() {
        out.push(if i == 0 { r.ratio } else { r.mu / trace.rows[i - 1].mu });
    }
    out
}

fn report_one(path: &Path, tail: usize) -> Result<(String, IterTrace, SuperlinearReport), CliError> {
    let mut trace = formats::read_trace(path)?;
    let ratios = recomputed(&trace);
    let drift = trace
        .rows
        .iter()
        .zip(&ratios)
        .map(|(r, q)| (r.ratio - q).abs() / q.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    for (r, q) in trace.rows.iter_mut().zip(&ratios) {
        r.ratio = *q;
    }
    let rep = ipm::superlinear_report(&trace, tail).map_err(|e| CliError::parse(path, e.to_string()))?;
    let mut text = format!("{}: {} iterations\n{:>4}  {:>12}  {:>12}\n", path.display(), trace.len(), "k", "mu", "ratio");
    for r in &trace.rows[trace.len() - tail..] {
        writeln!(text, "{:>4}  {:>12.4e}  {:>12.4e}", r.k, r.mu, r.ratio).unwrap();
    }
    writeln!(text, "  {}", tail_summary(&rep)).unwrap();
    writeln!(text, "  largest mismatch between stored and recomputed ratios {drift:.1e}").unwrap();
    Ok((text, trace, rep))
}

pub fn report(paths: &[PathBuf], tail: usize) -> Result<Report, CliError> {
    if tail == 0 {
        return Err(CliError::Usage("--tail must be positive".into()));
    }
    let mut text = String::new();
    let mut runs = Vec::new();
    for p in paths {
        let (t, trace, rep) = report_one(p, tail)?;
        text.push_str(&t);
        runs.push((p, trace, rep));
    }
    if let [(pa, ta, ra), (pb, tb, rb)] = runs.as_slice() {
        writeln!(text, "comparison").unwrap();
        for (p, t, r) in [(pa, ta, ra), (pb, tb, rb)] {
            writeln!(
                text,
                "  {:<40} {:>4} iterations, final mu {:.3e}, final ratio {:.3e}",
                p.display().to_string(),
                t.len(),
                t.final_mu(),
                r.final_ratio
            )
            .unwrap();
        }
        let diff = tb.len() as i64 - ta.len() as i64;
        writeln!(text, "  iteration difference (second minus first): {diff}").unwrap();
    }
    Ok(Report {
        text,
        exit: Exit::Solved,
    })
}
