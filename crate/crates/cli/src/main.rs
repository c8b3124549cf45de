//! `corrsense` command-line front end.
//!
//! Exit codes: 0 ok, 1 usage or input error, 2 solver hit its iteration cap,
//! 3 solver diverged, 4 the width-bound hypothesis is violated.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use corrsense::{Method, PriorCase};

/// Environment variable that overrides the default seed.
pub const SEED_ENV: &str = "CORRSENSE_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "corrsense",
    version,
    about = "Sparse recovery with prior information"
)]
struct Cli {
    /// Worker threads for phase-grid runs (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one recovery problem from CSV inputs
    Solve(SolveArgs),
    /// Cone geometry quantities
    #[command(subcommand)]
    Geom(GeomCommand),
    /// Run a phase-transition grid
    Phase(PhaseArgs),
    /// Extract the transition curve from a grid CSV
    Contour(ContourArgs),
    /// Compare transition curves of several methods
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Sensing matrix CSV, one row per line
    #[arg(long)]
    pub matrix: PathBuf,
    /// Observation vector CSV
    #[arg(long)]
    pub obs: PathBuf,
    /// lasso, mc, l1l1 or l1l2
    #[arg(long, value_parser = parse_token::<Method>)]
    pub method: Method,
    /// Combined shift p (mc only)
    #[arg(long)]
    pub shift: Option<PathBuf>,
    /// Prior signal phi (l1l1 and l1l2 only)
    #[arg(long)]
    pub prior: Option<PathBuf>,
    /// Prior weight lambda (l1l1 and l1l2 only)
    #[arg(long)]
    pub lam: Option<f64>,
    /// Noise bound
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    #[command(flatten)]
    pub solver: SolverFlags,
    /// Solution CSV; the report goes to `<out>.meta`
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Clone)]
pub struct SolverFlags {
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    #[arg(long, default_value_t = 5000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol_abs: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub tol_rel: f64,
    /// Stop with status diverged once ||x|| exceeds this
    #[arg(long, default_value_t = 1e8)]
    pub divergence_guard: f64,
    /// Keep the penalty parameter fixed
    #[arg(long)]
    pub fixed_rho: bool,
}

#[derive(Debug, Subcommand)]
pub enum GeomCommand {
    /// Print v for a signal and shift
    V {
        #[arg(long)]
        signal: PathBuf,
        #[arg(long)]
        shift: PathBuf,
    },
    /// Closed-form squared-width bound
    Width {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        s: usize,
        #[arg(long)]
        v: f64,
    },
    /// Monte-Carlo estimate of E dist^2(g, normal cone)
    Mc {
        #[arg(long)]
        signal: PathBuf,
        #[arg(long)]
        shift: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Predicted measurement count (C K^2 w + eps)^2
    Predict {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        s: usize,
        #[arg(long)]
        v: f64,
        /// Sub-Gaussian norm of the rows
        #[arg(long = "K", default_value_t = corrsense::geometry::BERNOULLI_SUBGAUSSIAN_NORM)]
        k: f64,
        #[arg(long = "C", default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
    },
}

#[derive(Debug, Args)]
pub struct GridFlags {
    #[arg(long, default_value_t = 128)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub step: usize,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    /// Success threshold on the relative error
    #[arg(long, default_value_t = 1e-2)]
    pub tol: f64,
    /// Prior case a..f
    #[arg(long, value_parser = parse_token::<PriorCase>, default_value = "a")]
    pub case: PriorCase,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    /// Prior weight lambda for l1l1 / l1l2 (they see phi = p / lambda)
    #[arg(long, default_value_t = 1.0)]
    pub lam: f64,
    #[command(flatten)]
    pub solver: SolverFlags,
}

#[derive(Debug, Args)]
pub struct PhaseArgs {
    #[command(flatten)]
    pub grid: GridFlags,
    #[arg(long, value_parser = parse_token::<Method>, default_value = "mc")]
    pub method: Method,
    /// Re-run the protocol recorded in a grid sidecar; other grid flags are ignored
    #[arg(long)]
    pub from_meta: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ContourArgs {
    #[arg(long)]
    pub grid: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub level: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub grid: GridFlags,
    /// Comma-separated methods
    #[arg(long, value_delimiter = ',', value_parser = parse_token::<Method>, default_value = "mc,l1l1,l1l2")]
    pub methods: Vec<Method>,
    #[arg(long, default_value_t = 0.5)]
    pub level: f64,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_token<T: FromStr>(s: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e: T::Err| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Solve(args) => commands::solve(&args),
        Command::Geom(cmd) => commands::geom(&cmd),
        Command::Phase(args) => commands::phase(&args, cli.threads),
        Command::Contour(args) => commands::contour(&args),
        Command::Compare(args) => commands::compare(&args, cli.threads),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
