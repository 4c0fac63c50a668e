use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sdfp::commands::{self, CompareOptions, Report, SolveOptions};
use sdfp::formats::{InputFormat, ProblemFormat};
use sdfp::{CliError, Exit};
use sdfp_core::phase1::DEFAULT_MU0;
use sdfp_core::Params;

/// Interior point solver for linear semidefinite feasibility problems.
#[derive(Parser)]
#[command(name = "sdfp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SolverFlags {
    #[arg(long, default_value_t = Params::default().beta1)]
    beta1: f64,
    #[arg(long, default_value_t = Params::default().beta2)]
    beta2: f64,
    /// Stopping tolerance on the scaled gap and residuals.
    #[arg(long, default_value_t = Params::default().eps)]
    eps: f64,
    /// Threshold below which tau counts as zero.
    #[arg(long, default_value_t = Params::default().eps_tau)]
    eps_tau: f64,
    #[arg(long, default_value_t = Params::default().max_iter)]
    max_iter: usize,
}

impl SolverFlags {
    fn params(&self) -> Params {
        Params {
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
            eps_tau: self.eps_tau,
            max_iter: self.max_iter,
            ..Params::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve one or more problems; writes <stem>.solution.json and <stem>.trace.csv.
    Solve {
        #[arg(required = true)]
        problems: Vec<PathBuf>,
        /// Start from X = Y = sqrt(mu0) I instead of the phase-I warm start.
        #[arg(long)]
        cold: bool,
        #[arg(long, default_value_t = DEFAULT_MU0)]
        mu0: f64,
        #[arg(long, value_enum, default_value_t = ProblemFormat::Json)]
        format: ProblemFormat,
        /// Directory for outputs (default: next to each problem).
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Number of trailing ratios in the summary.
        #[arg(long, default_value_t = 3)]
        tail: usize,
        #[command(flatten)]
        solver: SolverFlags,
    },
    /// Generate an instance with a strictly complementary witness.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        /// Rank of the primal witness.
        #[arg(long)]
        r: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Problem file; the witness goes to <stem>.witness.json beside it.
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Convert SDPA sparse or LMI input to problem JSON.
    Convert {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = InputFormat::Sdpa)]
        from: InputFormat,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Check the structural assumptions of a problem and its witness.
    Verify {
        problem: PathBuf,
        #[arg(long, value_enum, default_value_t = ProblemFormat::Json)]
        format: ProblemFormat,
        /// Witness file (default: <stem>.witness.json beside the problem).
        #[arg(long)]
        witness: Option<PathBuf>,
        /// Random samples for the monotonicity check.
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the homogeneous and SDLCP iterations in lockstep and compare them.
    Compare {
        problem: PathBuf,
        #[arg(long, default_value_t = 15)]
        k_max: usize,
        #[arg(long)]
        cold: bool,
        /// Fail on any deviation over tolerance, including rounding-level ones.
        #[arg(long)]
        strict: bool,
        #[arg(long, value_enum, default_value_t = ProblemFormat::Json)]
        format: ProblemFormat,
        #[arg(long, hide = true)]
        inject_fault: Option<f64>,
        #[command(flatten)]
        solver: SolverFlags,
    },
    /// Summarize the ratio tail of one trace, or compare two traces.
    Report {
        #[arg(required = true, num_args = 1..=2)]
        traces: Vec<PathBuf>,
        #[arg(long, default_value_t = 3)]
        tail: usize,
    },
}

fn run(cli: Cli) -> Result<Report, CliError> {
    match cli.command {
        Command::Solve {
            problems,
            cold,
            mu0,
            format,
            out_dir,
            tail,
            solver,
        } => {
            if !(mu0 > 0.0) {
                return Err(CliError::Usage("--mu0 must be positive".into()));
            }
            let opts = SolveOptions {
                cold,
                params: solver.params(),
                mu0,
                format,
                out_dir,
                tail,
            };
            Ok(commands::solve(&problems, &opts))
        }
        Command::Generate { n, m, r, seed, out } => commands::generate_cmd(n, m, r, seed, &out),
        Command::Convert { input, from, out } => commands::convert(&input, from, &out),
        Command::Verify {
            problem,
            format,
            witness,
            trials,
            seed,
        } => commands::verify(&problem, format, witness.as_deref(), trials, seed),
        Command::Compare {
            problem,
            k_max,
            cold,
            strict,
            format,
            inject_fault,
            solver,
        } => commands::compare(
            &problem,
            &CompareOptions {
                k_max,
                cold,
                strict,
                format,
                params: solver.params(),
                inject_fault,
            },
        ),
        Command::Report { traces, tail } => commands::report(&traces, tail),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { Exit::Input.code() } else { 0 });
        }
    };
    let (text, exit) = match run(cli) {
        Ok(r) => (r.text, r.exit),
        Err(e) => {
            eprintln!("error: {e}");
            (String::new(), e.exit())
        }
    };
    let _ = std::io::stdout().write_all(text.as_bytes());
    ExitCode::from(exit.code())
}
