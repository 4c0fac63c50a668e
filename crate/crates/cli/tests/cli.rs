use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn sdfp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdfp"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn generated(dir: &Path, name: &str) {
    let out = sdfp(dir, &["generate", "--n", "5", "--m", "4", "--r", "2", "--seed", "7", "-o", name]);
    assert_eq!(code(&out), 0, "{out:?}");
}

#[test]
fn generate_is_byte_stable() {
    let d = TempDir::new().unwrap();
    generated(d.path(), "a.json");
    generated(d.path(), "b.json");
    assert_eq!(fs::read(d.path().join("a.json")).unwrap(), fs::read(d.path().join("b.json")).unwrap());
    assert_eq!(
        fs::read(d.path().join("a.witness.json")).unwrap(),
        fs::read(d.path().join("b.witness.json")).unwrap()
    );
}

#[test]
fn generate_rejects_full_rank_witness() {
    let d = TempDir::new().unwrap();
    let out = sdfp(d.path(), &["generate", "--n", "4", "--m", "3", "--r", "4", "-o", "x.json"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn solve_generated_instance() {
    let d = TempDir::new().unwrap();
    generated(d.path(), "g.json");
    let out = sdfp(d.path(), &["solve", "g.json"]);
    assert_eq!(code(&out), 0, "{out:?}");
    assert!(stdout(&out).contains("final ratio"));

    let csv = fs::read_to_string(d.path().join("g.trace.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "k,mu,alpha_bar,alpha1,alpha2,delta,tau,kappa,norm_r,norm_s,gamma,nbr_dist,ratio"
    );
    let sol: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.path().join("g.solution.json")).unwrap()).unwrap();
    assert_eq!(sol["status"], "solved");
    assert_eq!(sol["X"].as_array().unwrap().len(), 25);
    assert_eq!(sol["y"].as_array().unwrap().len(), 4);
    assert!(sol["iters"].as_u64().unwrap() > 0);
    assert!(sol["final_ratio"].as_f64().unwrap() < 0.05);

    // identical inputs give identical outputs
    let first = csv.clone();
    assert_eq!(code(&sdfp(d.path(), &["solve", "g.json"])), 0);
    assert_eq!(fs::read_to_string(d.path().join("g.trace.csv")).unwrap(), first);
}

#[test]
fn solve_several_files_with_worst_exit() {
    let d = TempDir::new().unwrap();
    generated(d.path(), "g.json");
    fs::write(d.path().join("t.json"), r#"{"n":3,"m":1,"A":[[1,0,0,0,1,0,0,0,1]],"b":[-1]}"#).unwrap();
    let out = sdfp(d.path(), &["solve", "g.json", "t.json", "--out-dir", "out"]);
    assert_eq!(code(&out), 2, "{out:?}");
    assert!(d.path().join("out/g.solution.json").exists());
    assert!(d.path().join("out/t.solution.json").exists());
}

#[test]
fn tau_collapse_exits_2() {
    let d = TempDir::new().unwrap();
    fs::write(d.path().join("t.json"), r#"{"n":3,"m":1,"A":[[1,0,0,0,1,0,0,0,1]],"b":[-1]}"#).unwrap();
    let out = sdfp(d.path(), &["solve", "t.json", "--cold"]);
    assert_eq!(code(&out), 2, "{out:?}");
    let sol: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.path().join("t.solution.json")).unwrap()).unwrap();
    assert_eq!(sol["status"], "no_optimal_solution");
    assert!(sol["X"].is_null());
}

#[test]
fn missing_dual_interior_exits_3() {
    let d = TempDir::new().unwrap();
    fs::write(d.path().join("p.json"), r#"{"n":2,"m":1,"A":[[[1,0],[0,-1]]],"b":[1]}"#).unwrap();
    assert_eq!(code(&sdfp(d.path(), &["solve", "p.json"])), 3);
}

#[test]
fn iteration_budget_exits_4() {
    let d = TempDir::new().unwrap();
    generated(d.path(), "g.json");
    assert_eq!(code(&sdfp(d.path(), &["solve", "g.json", "--max-iter", "2"])), 4);
}

#[test]
fn malformed_input_exits_1() {
    let d = TempDir::new().unwrap();
    fs::write(d.path().join("bad.json"), "{\"n\": 2,").unwrap();
    assert_eq!(code(&sdfp(d.path(), &["solve", "bad.json"])), 1);
    fs::write(d.path().join("asym.json"), r#"{"n":2,"m":1,"A":[[1,2,0,1]],"b":[1]}"#).unwrap();
    assert_eq!(code(&sdfp(d.path(), &["solve", "asym.json"])), 1);
    assert_eq!(code(&sdfp(d.path(), &["solve", "missing.json"])), 1);
    assert_eq!(code(&sdfp(d.path(), &["solve", "--beta1", "0.9", "bad.json"])), 1);
}

#[test]
fn verify_generated_instance() {
    let d = TempDir::new().unwrap();
    generated(d.path(), "g.json");
    let out = sdfp(d.path(), &["verify", "g.json"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(!stdout(&out).contains("FAIL"));
    assert!(!stdout(&out).contains("skipped"));

    fs::remove_file(d.path().join("g.witness.json")).unwrap();
    let out = sdfp(d.path(), &["verify", "g.json"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).matches("no witness").count(), 3);
}

#[test]
fn verify_reports_rank_deficiency() {
    let d = TempDir::new().unwrap();
    fs::write(d.path().join("r.json"), r#"{"n":2,"m":2,"A":[[1,0,0,1],[2,0,0,2]],"b":[1,2]}"#).unwrap();
    let out = sdfp(d.path(), &["verify", "r.json"]);
    assert_eq!(code(&out), 4);
    let text = stdout(&out);
    assert!(text.lines().any(|l| l.contains("constraint rank") && l.contains("FAIL")));
    assert_eq!(text.matches("skipped").count(), 6);
}

#[test]
fn compare_passes_and_catches_fault() {
    let d = TempDir::new().unwrap();
    generated(d.path(), "g.json");
    let out = sdfp(d.path(), &["compare", "g.json"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let out = sdfp(d.path(), &["compare", "g.json", "--inject-fault", "1e-3"]);
    assert_eq!(code(&out), 4);
    assert!(stdout(&out).contains("equivalence violated"));
    assert_eq!(code(&sdfp(d.path(), &["compare", "g.json", "--k-max", "0"])), 0);
    let help = stdout(&sdfp(d.path(), &["compare", "--help"]));
    assert!(!help.contains("inject"));
}

#[test]
fn report_reads_tail_and_compares() {
    let d = TempDir::new().unwrap();
    generated(d.path(), "g.json");
    assert_eq!(code(&sdfp(d.path(), &["solve", "g.json"])), 0);
    assert_eq!(code(&sdfp(d.path(), &["solve", "g.json", "--cold", "--out-dir", "cold"])), 0);
    let out = sdfp(d.path(), &["report", "g.trace.csv"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains(": superlinear tail"), "{}", stdout(&out));
    let out = sdfp(d.path(), &["report", "g.trace.csv", "cold/g.trace.csv"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("comparison"));

    fs::write(d.path().join("empty.csv"), "").unwrap();
    assert_eq!(code(&sdfp(d.path(), &["report", "empty.csv"])), 1);
    fs::write(
        d.path().join("short.csv"),
        "k,mu,alpha_bar,alpha1,alpha2,delta,tau,kappa,norm_r,norm_s,gamma,nbr_dist,ratio\n",
    )
    .unwrap();
    assert_eq!(code(&sdfp(d.path(), &["report", "short.csv"])), 1);
}

#[test]
fn report_flags_linear_tail() {
    let d = TempDir::new().unwrap();
    let mut csv = String::from("k,mu,alpha_bar,alpha1,alpha2,delta,tau,kappa,norm_r,norm_s,gamma,nbr_dist,ratio\n");
    let mut mu = 1.0;
    for k in 1..=6 {
        mu *= 0.5;
        csv.push_str(&format!("{k},{mu},0.5,0.5,0.5,0.1,1,{mu},0,0,0,0,0.5\n"));
    }
    fs::write(d.path().join("lin.csv"), csv).unwrap();
    let out = sdfp(d.path(), &["report", "lin.csv"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("no superlinear tail"));
}

const SDPA: &str = r#""a two-constraint feasibility problem
2 =mDIM
1 =nBLOCK
2 =bLOCKsTRUCT
{1.0, 0.0}
1 1 1 1 1.0
1 1 2 2 1.0
2 1 1 2 1.0
"#;

#[test]
fn sdpa_converts_and_solves() {
    let d = TempDir::new().unwrap();
    fs::write(d.path().join("p.dat-s"), SDPA).unwrap();
    let out = sdfp(d.path(), &["convert", "p.dat-s", "-o", "p.json"]);
    assert_eq!(code(&out), 0, "{out:?}");
    let p: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.path().join("p.json")).unwrap()).unwrap();
    assert_eq!(p["m"], 2);
    assert_eq!(p["A"][1], serde_json::json!([0.0, 1.0, 1.0, 0.0]));
    let out = sdfp(d.path(), &["solve", "p.dat-s", "--format", "sdpa"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
}

#[test]
fn sdpa_with_cost_is_rejected() {
    let d = TempDir::new().unwrap();
    fs::write(d.path().join("c.dat-s"), format!("{SDPA}0 1 1 1 3.0\n")).unwrap();
    let out = sdfp(d.path(), &["convert", "c.dat-s", "-o", "c.json"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("cost"));
}

#[test]
fn lmi_converts() {
    let d = TempDir::new().unwrap();
    fs::write(d.path().join("l.json"), r#"{"n":2,"B0":[1,0,0,0],"B":[[0,0,0,1]]}"#).unwrap();
    let out = sdfp(d.path(), &["convert", "l.json", "--from", "lmi", "-o", "p.json"]);
    assert_eq!(code(&out), 0, "{out:?}");
    let p: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.path().join("p.json")).unwrap()).unwrap();
    assert_eq!(p["m"], 2);
}
