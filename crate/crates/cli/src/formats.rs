//! File formats: problem, witness, LMI and solution JSON, SDPA sparse
//! input, and the trace CSV.
//!
//! Matrices are written as flat row-major arrays of `n²` numbers; nested
//! row arrays are accepted on input.

use std::fs;
use std::path::{Path, PathBuf};

use sdfp_core::dense::DenseMat;
use sdfp_core::ipm::{IterRecord, IterTrace};
use sdfp_core::problem::Lmi;
use sdfp_core::{Lsdfp, SymMat, Witness};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const TRACE_COLUMNS: [&str; 13] = [
    "k", "mu", "alpha_bar", "alpha1", "alpha2", "delta", "tau", "kappa", "norm_r", "norm_s", "gamma", "nbr_dist",
    "ratio",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ProblemFormat {
    Json,
    Sdpa,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum InputFormat {
    Json,
    Sdpa,
    Lmi,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixRepr {
    Flat(Vec<f64>),
    Rows(Vec<Vec<f64>>),
}

impl MatrixRepr {
    fn flatten(self) -> Vec<f64> {
        match self {
            MatrixRepr::Flat(v) => v,
            MatrixRepr::Rows(rows) => rows.into_iter().flatten().collect(),
        }
    }
}

fn flat(x: &SymMat) -> MatrixRepr {
    MatrixRepr::Flat(x.as_row_major().to_vec())
}

fn dense_flat(x: &DenseMat) -> MatrixRepr {
    MatrixRepr::Flat(x.as_slice().to_vec())
}

fn sym(path: &Path, what: &str, n: usize, m: MatrixRepr) -> Result<SymMat, CliError> {
    let data = m.flatten();
    if data.len() != n * n {
        return Err(CliError::parse(path, format!("{what}: expected {} entries, found {}", n * n, data.len())));
    }
    SymMat::from_row_major(n, &data).map_err(|e| CliError::parse(path, format!("{what}: {e}")))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    n: usize,
    m: usize,
    #[serde(rename = "A")]
    a: Vec<MatrixRepr>,
    b: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WitnessFile {
    #[serde(rename = "Xstar")]
    x_star: MatrixRepr,
    ystar: Vec<f64>,
    #[serde(rename = "Ystar")]
    z_star: MatrixRepr,
    partition_rank: usize,
    #[serde(rename = "Q")]
    q: MatrixRepr,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LmiFile {
    n: usize,
    #[serde(rename = "B0")]
    b0: MatrixRepr,
    #[serde(rename = "B")]
    bs: Vec<MatrixRepr>,
}

/// Solution JSON. Matrices and `y` are divided by `τ` and present only
/// when the status is `solved`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SolutionFile {
    pub status: String,
    pub termination: Option<String>,
    #[serde(rename = "X")]
    pub x: Option<Vec<f64>>,
    pub y: Option<Vec<f64>>,
    #[serde(rename = "Y")]
    pub z: Option<Vec<f64>>,
    pub tau: Option<f64>,
    pub kappa: Option<f64>,
    pub iters: usize,
    pub final_mu: Option<f64>,
    pub final_ratio: Option<f64>,
    pub message: Option<String>,
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn from_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::parse(path, e.to_string()))
}

fn to_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_text(path, &text)
}

pub fn read_problem(path: &Path, format: ProblemFormat) -> Result<Lsdfp, CliError> {
    match format {
        ProblemFormat::Json => read_problem_json(path),
        ProblemFormat::Sdpa => parse_sdpa(path, &read_text(path)?),
    }
}

pub fn read_input(path: &Path, format: InputFormat) -> Result<Lsdfp, CliError> {
    match format {
        InputFormat::Json => read_problem_json(path),
        InputFormat::Sdpa => parse_sdpa(path, &read_text(path)?),
        InputFormat::Lmi => Ok(sdfp_core::problem::from_lmi(&read_lmi(path)?)?.0),
    }
}

fn read_problem_json(path: &Path) -> Result<Lsdfp, CliError> {
    let f: ProblemFile = from_json(path)?;
    if f.a.len() != f.m || f.b.len() != f.m {
        return Err(CliError::parse(
            path,
            format!("m = {} but A has {} and b has {} entries", f.m, f.a.len(), f.b.len()),
        ));
    }
    let a = f
        .a
        .into_iter()
        .enumerate()
        .map(|(i, ai)| sym(path, &format!("A[{i}]"), f.n, ai))
        .collect::<Result<Vec<_>, _>>()?;
    Lsdfp::new(f.n, a, f.b).map_err(|e| CliError::parse(path, e.to_string()))
}

pub fn write_problem(path: &Path, p: &Lsdfp) -> Result<(), CliError> {
    to_json(
        path,
        &ProblemFile {
            n: p.n(),
            m: p.m(),
            a: p.a().iter().map(flat).collect(),
            b: p.b().to_vec(),
        },
    )
}

pub fn read_lmi(path: &Path) -> Result<Lmi, CliError> {
    let f: LmiFile = from_json(path)?;
    let b0 = sym(path, "B0", f.n, f.b0)?;
    let bs = f
        .bs
        .into_iter()
        .enumerate()
        .map(|(j, bj)| sym(path, &format!("B[{j}]"), f.n, bj))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Lmi { b0, bs })
}

/// `dir/name.json` → `dir/name.witness.json`.
pub fn witness_path(problem: &Path) -> PathBuf {
    let stem = problem.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    problem.with_file_name(format!("{stem}.witness.json"))
}

pub fn write_witness(path: &Path, w: &Witness) -> Result<(), CliError> {
    to_json(
        path,
        &WitnessFile {
            x_star: flat(&w.x_star),
            ystar: w.y_star.clone(),
            z_star: flat(&w.z_star),
            partition_rank: w.partition_rank,
            q: dense_flat(&w.q),
        },
    )
}

pub fn read_witness(path: &Path, p: &Lsdfp) -> Result<Witness, CliError> {
    let f: WitnessFile = from_json(path)?;
    let n = p.n();
    if f.ystar.len() != p.m() {
        return Err(CliError::parse(path, format!("ystar has {} entries, m = {}", f.ystar.len(), p.m())));
    }
    if f.partition_rank > n {
        return Err(CliError::parse(path, "partition_rank exceeds n"));
    }
    let q = f.q.flatten();
    let q = DenseMat::from_row_major(n, n, q).map_err(|e| CliError::parse(path, format!("Q: {e}")))?;
    Ok(Witness {
        x_star: sym(path, "Xstar", n, f.x_star)?,
        y_star: f.ystar,
        z_star: sym(path, "Ystar", n, f.z_star)?,
        partition_rank: f.partition_rank,
        q,
    })
}

pub fn write_solution(path: &Path, s: &SolutionFile) -> Result<(), CliError> {
    to_json(path, s)
}

pub fn read_solution(path: &Path) -> Result<SolutionFile, CliError> {
    from_json(path)
}

/// Single-block SDPA sparse input. The objective vector becomes `b`, the
/// constraint matrices `F_1..F_m` become `A_i`, and the cost matrix `F_0`
/// must vanish.
pub fn parse_sdpa(path: &Path, text: &str) -> Result<Lsdfp, CliError> {
    let err = |msg: String| CliError::parse(path, msg);
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('"') && !l.starts_with('*'));
    let clean = |l: &str| l.replace([',', '{', '}', '(', ')'], " ");
    let mut header = |what: &str| -> Result<String, CliError> {
        lines.next().map(clean).ok_or_else(|| err(format!("missing {what}")))
    };
    let first_int = |line: &str, what: &str| -> Result<i64, CliError> {
        line.split_whitespace()
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| err(format!("cannot read {what}")))
    };
    let m = first_int(&header("constraint count")?, "constraint count")?;
    let nblocks = first_int(&header("block count")?, "block count")?;
    if nblocks != 1 {
        return Err(err(format!("only a single block is supported, found {nblocks}")));
    }
    let n = first_int(&header("block structure")?, "block structure")?;
    if n <= 0 {
        return Err(err(format!("block size must be positive (dense), found {n}")));
    }
    if m <= 0 {
        return Err(err(format!("constraint count must be positive, found {m}")));
    }
    let (m, n) = (m as usize, n as usize);
    let rest: Vec<String> = lines.map(clean).collect();
    let mut tokens = rest.iter().flat_map(|l| l.split_whitespace());
    let mut number = |what: &str| -> Result<f64, CliError> {
        let t = tokens.next().ok_or_else(|| err(format!("missing {what}")))?;
        t.parse::<f64>().map_err(|_| err(format!("bad number {t:?} in {what}")))
    };
    let b = (0..m).map(|i| number(&format!("objective entry {}", i + 1))).collect::<Result<Vec<_>, _>>()?;
    let mut mats = vec![SymMat::zeros(n); m + 1];
    loop {
        let matno = match number("entry") {
            Ok(v) => v,
            Err(CliError::Parse { message, .. }) if message == "missing entry" => break,
            Err(e) => return Err(e),
        };
        let blk = number("block number")?;
        let i = number("row index")?;
        let j = number("column index")?;
        let v = number("value")?;
        let index = |x: f64, hi: usize, what: &str| -> Result<usize, CliError> {
            if x.fract() == 0.0 && x >= 0.0 && (x as usize) <= hi {
                Ok(x as usize)
            } else {
                Err(err(format!("{what} {x} out of range")))
            }
        };
        let matno = index(matno, m, "matrix number")?;
        if blk != 1.0 {
            return Err(err(format!("block number {blk} out of range")));
        }
        let (i, j) = (index(i, n, "row")?, index(j, n, "column")?);
        if i == 0 || j == 0 {
            return Err(err("indices are 1-based".into()));
        }
        mats[matno].set(i - 1, j - 1, v);
        mats[matno].set(j - 1, i - 1, v);
    }
    let cost = mats.remove(0);
    if cost.max_abs() != 0.0 {
        return Err(CliError::NonZeroCost {
            largest: cost.max_abs(),
        });
    }
    Lsdfp::new(n, mats, b).map_err(|e| err(e.to_string()))
}

/// Round-trip safe: 17 significant digits.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn trace_csv(trace: &IterTrace) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRACE_COLUMNS).expect("in-memory write");
    for r in &trace.rows {
        let mut rec = vec![r.k.to_string()];
        rec.extend(
            [
                r.mu, r.alpha_bar, r.alpha1, r.alpha2, r.delta, r.tau, r.kappa, r.norm_r, r.norm_s, r.gamma, r.nbr_dist,
                r.ratio,
            ]
            .map(num),
        );
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flushed")).expect("ascii")
}

pub fn write_trace(path: &Path, trace: &IterTrace) -> Result<(), CliError> {
    write_text(path, &trace_csv(trace))
}

/// Reads a trace CSV. Columns not stored in the file (`mu_actual`,
/// `pred_dist`, `scale`) are filled from `mu` or left at zero.
pub fn read_trace(path: &Path) -> Result<IterTrace, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = r.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != TRACE_COLUMNS {
        return Err(CliError::parse(path, format!("expected columns {}", TRACE_COLUMNS.join(","))));
    }
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let field = |i: usize| -> Result<f64, CliError> {
            rec[i]
                .trim()
                .parse::<f64>()
                .map_err(|_| CliError::parse(path, format!("row {}: bad {} value {:?}", line + 1, TRACE_COLUMNS[i], &rec[i])))
        };
        let k = rec[0]
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::parse(path, format!("row {}: bad k {:?}", line + 1, &rec[0])))?;
        let mu = field(1)?;
        rows.push(IterRecord {
            k,
            mu,
            mu_actual: mu,
            alpha_bar: field(2)?,
            alpha1: field(3)?,
            alpha2: field(4)?,
            delta: field(5)?,
            tau: field(6)?,
            kappa: field(7)?,
            norm_r: field(8)?,
            norm_s: field(9)?,
            gamma: field(10)?,
            nbr_dist: field(11)?,
            pred_dist: 0.0,
            ratio: field(12)?,
            at_resolution: false,
            scale: 0.0,
        });
    }
    let mu0 = rows.first().map_or(f64::NAN, |r| r.mu / r.ratio);
    Ok(IterTrace { mu0, rows })
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.kind() {
        csv::ErrorKind::Io(_) => match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::io(path, io),
            _ => unreachable!(),
        },
        _ => CliError::parse(path, e.to_string()),
    }
}
