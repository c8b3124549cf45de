use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use corrsense::experiments::contour_to_csv;
use corrsense::geometry::{compute_v, mc_width_estimate, sample_size_bound, width_bound_sq};
use corrsense::io::{format_f64, key_values, read_vector, write_vector};
use corrsense::model::substream_from_seed;
use corrsense::{
    compare_methods, compare_methods_with_threads, extract_contour, run_phase_grid,
    run_phase_grid_with_threads, ConeDescriptor, GridCounts, Method, PhaseProtocol, PriorShift,
    Regularizer, SensingProblem, SolveStatus, SolverConfig, SparseSignal,
};

use crate::{
    CompareArgs, ContourArgs, GeomCommand, GridFlags, PhaseArgs, SolveArgs, SolverFlags, SEED_ENV,
};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(corrsense::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(corrsense::Error::ZeroInShiftedSubdifferential) => 4,
            _ => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => f.write_str(msg),
            CliError::Core(err) => write!(f, "{err}"),
        }
    }
}

impl From<corrsense::Error> for CliError {
    fn from(err: corrsense::Error) -> Self {
        CliError::Core(err)
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Core(err.into())
    }
}

type CliResult = Result<u8, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// `<path>.meta`
fn sidecar_path(path: &Path) -> PathBuf {
    let mut os: OsString = path.as_os_str().to_owned();
    os.push(".meta");
    PathBuf::from(os)
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV) {
        Ok(raw) => raw
            .trim()
            .parse()
            .map_err(|_| usage(format!("{SEED_ENV}={raw} is not a 64-bit unsigned integer"))),
        Err(_) => Ok(0),
    }
}

fn solver_config(flags: &SolverFlags) -> SolverConfig {
    SolverConfig {
        rho: flags.rho,
        max_iters: flags.max_iters,
        tol_abs: flags.tol_abs,
        tol_rel: flags.tol_rel,
        divergence_guard: flags.divergence_guard,
        adaptive_rho: !flags.fixed_rho,
    }
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

pub fn solve(args: &SolveArgs) -> CliResult {
    let reject = |flag: &str, given: bool| {
        if given {
            Err(usage(format!(
                "--{flag} is not accepted with --method {}",
                args.method
            )))
        } else {
            Ok(())
        }
    };
    let mut inputs: Vec<(String, String)> = vec![
        ("command".into(), "solve".into()),
        ("matrix".into(), path_str(&args.matrix)),
        ("obs".into(), path_str(&args.obs)),
        ("method".into(), args.method.to_string()),
    ];
    let reg = match args.method {
        Method::Lasso => {
            reject("shift", args.shift.is_some())?;
            reject("prior", args.prior.is_some())?;
            reject("lam", args.lam.is_some())?;
            Regularizer::Lasso
        }
        Method::MaxCorr => {
            reject("prior", args.prior.is_some())?;
            reject("lam", args.lam.is_some())?;
            let path = args
                .shift
                .as_ref()
                .ok_or_else(|| usage("--method mc requires --shift <csv>"))?;
            inputs.push(("shift".into(), path_str(path)));
            Regularizer::max_correlation(PriorShift::new(read_vector(path)?))
        }
        Method::L1L1 | Method::L1L2 => {
            reject("shift", args.shift.is_some())?;
            let path = args
                .prior
                .as_ref()
                .ok_or_else(|| usage(format!("--method {} requires --prior <csv>", args.method)))?;
            let lam = args.lam.unwrap_or(1.0);
            inputs.push(("prior".into(), path_str(path)));
            inputs.push(("lam".into(), lam.to_string()));
            let phi = read_vector(path)?;
            if args.method == Method::L1L1 {
                Regularizer::l1_l1(phi, lam)?
            } else {
                Regularizer::l1_l2(phi, lam)?
            }
        }
    };
    let a = corrsense::io::read_matrix(&args.matrix)?;
    let y = read_vector(&args.obs)?;
    let problem = SensingProblem::new(a, y, args.delta)?;
    let cfg = solver_config(&args.solver);
    let report = corrsense::solve(&problem, &reg, &cfg)?;

    inputs.extend([
        ("delta".into(), args.delta.to_string()),
        ("solver.rho".into(), cfg.rho.to_string()),
        ("solver.max_iters".into(), cfg.max_iters.to_string()),
        ("solver.tol_abs".into(), cfg.tol_abs.to_string()),
        ("solver.tol_rel".into(), cfg.tol_rel.to_string()),
        (
            "solver.divergence_guard".into(),
            cfg.divergence_guard.to_string(),
        ),
        ("solver.adaptive_rho".into(), cfg.adaptive_rho.to_string()),
        ("out".into(), path_str(&args.out)),
    ]);
    let results: Vec<(String, String)> = vec![
        ("status".into(), report.status.to_string()),
        ("iterations".into(), report.iterations.to_string()),
        ("objective".into(), format_f64(report.objective_value)),
        ("primal_residual".into(), format_f64(report.primal_residual)),
        ("dual_residual".into(), format_f64(report.dual_residual)),
        ("final_rho".into(), format_f64(report.rho)),
        ("version".into(), env!("CARGO_PKG_VERSION").into()),
    ];
    write_vector(&args.out, &report.solution)?;
    let mut meta = key_values(&inputs);
    meta.push_str(&key_values(&results));
    fs::write(sidecar_path(&args.out), meta)?;
    print!("{}", key_values(&results));

    Ok(match report.status {
        SolveStatus::Converged => 0,
        SolveStatus::MaxIters => 2,
        SolveStatus::Diverged => 3,
    })
}

fn read_cone(signal: &Path, shift: &Path) -> Result<ConeDescriptor, CliError> {
    Ok(ConeDescriptor::new(
        SparseSignal::new(read_vector(signal)?),
        PriorShift::new(read_vector(shift)?),
    )?)
}

pub fn geom(cmd: &GeomCommand) -> CliResult {
    let lines: Vec<(&str, String)> = match cmd {
        GeomCommand::V { signal, shift } => {
            let cone = read_cone(signal, shift)?;
            vec![("v", compute_v(&cone).to_string())]
        }
        GeomCommand::Width { n, s, v } => {
            vec![("width_sq", width_bound_sq(*n, *s, *v)?.to_string())]
        }
        GeomCommand::Mc {
            signal,
            shift,
            samples,
            seed,
        } => {
            let cone = read_cone(signal, shift)?;
            let seed = resolve_seed(*seed)?;
            let est = mc_width_estimate(&cone, *samples, &mut substream_from_seed(seed))?;
            vec![
                ("mean_sq_dist", est.mean_sq_dist.to_string()),
                ("std_error", est.std_error.to_string()),
                ("closed_form_bound", est.closed_form_bound.to_string()),
                ("samples", est.samples.to_string()),
                ("seed", seed.to_string()),
            ]
        }
        GeomCommand::Predict { n, s, v, k, c, eps } => {
            let w = width_bound_sq(*n, *s, *v)?;
            vec![
                ("width_sq", w.to_string()),
                (
                    "m_predicted",
                    sample_size_bound(w, *k, *c, *eps)?.to_string(),
                ),
            ]
        }
    };
    print!("{}", key_values(&lines));
    Ok(0)
}

fn protocol_from_flags(flags: &GridFlags, method: Method) -> Result<PhaseProtocol, CliError> {
    let protocol = PhaseProtocol {
        n: flags.n,
        grid_step: flags.step,
        trials_per_cell: flags.trials,
        tol: flags.tol,
        delta: flags.delta,
        case: flags.case,
        method,
        base_seed: resolve_seed(flags.seed)?,
        solver: solver_config(&flags.solver),
        prior_weight: flags.lam,
        ..PhaseProtocol::default()
    };
    protocol.validate()?;
    Ok(protocol)
}

pub fn phase(args: &PhaseArgs, threads: Option<usize>) -> CliResult {
    let protocol = match &args.from_meta {
        Some(meta) => PhaseProtocol::from_key_values(&fs::read_to_string(meta)?)?,
        None => protocol_from_flags(&args.grid, args.method)?,
    };
    let grid = match threads {
        Some(t) => run_phase_grid_with_threads(&protocol, t)?,
        None => run_phase_grid(&protocol)?,
    };
    fs::write(&args.out, grid.to_csv())?;
    fs::write(sidecar_path(&args.out), grid.sidecar())?;
    print!(
        "{}",
        key_values(&[
            ("cells", grid.counts.counts.len().to_string()),
            ("mean_success", grid.counts.mean_success().to_string()),
            ("failures.max_iters", grid.failures.max_iters.to_string()),
            ("failures.diverged", grid.failures.diverged.to_string()),
        ])
    );
    Ok(0)
}

pub fn contour(args: &ContourArgs) -> CliResult {
    let grid = GridCounts::from_csv(&fs::read_to_string(&args.grid)?)?;
    let points = extract_contour(&grid, args.level)?;
    fs::write(&args.out, contour_to_csv(&points))?;
    fs::write(
        sidecar_path(&args.out),
        key_values(&[
            ("command", "contour".to_string()),
            ("grid", path_str(&args.grid)),
            ("level", args.level.to_string()),
            ("version", env!("CARGO_PKG_VERSION").to_string()),
        ]),
    )?;
    let defined = points.iter().filter(|p| p.m_star.is_some()).count();
    print!(
        "{}",
        key_values(&[
            ("rows", points.len().to_string()),
            ("defined", defined.to_string())
        ])
    );
    Ok(0)
}

pub fn compare(args: &CompareArgs, threads: Option<usize>) -> CliResult {
    if args.methods.is_empty() {
        return Err(usage("--methods needs at least one method"));
    }
    let protocols = args
        .methods
        .iter()
        .map(|&m| protocol_from_flags(&args.grid, m))
        .collect::<Result<Vec<_>, _>>()?;
    let table = match threads {
        Some(t) => compare_methods_with_threads(&protocols, args.level, t)?,
        None => compare_methods(&protocols, args.level)?,
    };
    fs::write(&args.out, table.to_csv())?;
    fs::write(sidecar_path(&args.out), table.sidecar())?;
    print!("{}", table.to_csv());
    Ok(0)
}
