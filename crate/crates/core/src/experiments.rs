//! Phase-transition experiments over the `(s, m)` plane.
//!
//! For every grid cell a batch of independent trials draws a fresh sparse
//! signal, a symmetric Bernoulli matrix and a prior shift, solves the chosen
//! program and declares success when `||x_hat - x*|| / ||x*|| < tol`. Every
//! trial owns a substream keyed by `(base_seed, s, m, trial, case)`, so grids
//! do not depend on thread count or scheduling, and methods compared under
//! the same case see the same instances.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::key_values;
use crate::model::{
    derive_substream, generate_bernoulli_matrix, generate_sparse_signal, make_prior_case,
    Amplitude, PriorCase, PriorShift, SensingProblem, TrialSeed,
};
use crate::prox::Regularizer;
use crate::solvers::{solve, SolveStatus, SolverConfig};
use crate::Vector;

/// Recovery program used in a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    MaxCorr,
    L1L1,
    L1L2,
    Lasso,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::MaxCorr => "max_corr",
            Method::L1L1 => "l1_l1",
            Method::L1L2 => "l1_l2",
            Method::Lasso => "lasso",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mc" | "max_corr" | "maxcorr" => Ok(Method::MaxCorr),
            "l1l1" | "l1_l1" => Ok(Method::L1L1),
            "l1l2" | "l1_l2" => Ok(Method::L1L2),
            "lasso" => Ok(Method::Lasso),
            other => Err(Error::invalid(format!(
                "unknown method `{other}` (expected lasso, mc, l1l1 or l1l2)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseProtocol {
    pub n: usize,
    pub grid_step: usize,
    pub trials_per_cell: usize,
    /// Success threshold on the relative error.
    pub tol: f64,
    /// Noise bound; zero gives exact observations.
    pub delta: f64,
    pub case: PriorCase,
    pub method: Method,
    pub base_seed: u64,
    pub solver: SolverConfig,
    pub amplitude: Amplitude,
    /// `lambda` for the l1-l1 / l1-l2 baselines, which see `phi = p / lambda`.
    pub prior_weight: f64,
}

impl Default for PhaseProtocol {
    fn default() -> Self {
        PhaseProtocol {
            n: 128,
            grid_step: 2,
            trials_per_cell: 50,
            tol: 1e-2,
            delta: 0.0,
            case: PriorCase::A,
            method: Method::MaxCorr,
            base_seed: 0,
            solver: SolverConfig::default(),
            amplitude: Amplitude::StandardNormal,
            prior_weight: 1.0,
        }
    }
}

impl PhaseProtocol {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("n must be >= 1"));
        }
        if self.grid_step == 0 {
            return Err(Error::invalid("grid step must be >= 1"));
        }
        if self.trials_per_cell == 0 {
            return Err(Error::invalid("trials per cell must be >= 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid(format!("tol must be > 0, got {}", self.tol)));
        }
        if !(self.delta >= 0.0) {
            return Err(Error::invalid(format!(
                "delta must be >= 0, got {}",
                self.delta
            )));
        }
        if !(self.prior_weight > 0.0) || !self.prior_weight.is_finite() {
            return Err(Error::invalid(format!(
                "prior weight must be finite and > 0, got {}",
                self.prior_weight
            )));
        }
        self.solver.validate()
    }

    /// `0, step, 2 step, ...` up to `n`; `n` itself is always the last point.
    pub fn axis(&self) -> Vec<usize> {
        let mut axis: Vec<usize> = (0..=self.n).step_by(self.grid_step).collect();
        if axis.last() != Some(&self.n) {
            axis.push(self.n);
        }
        axis
    }

    pub fn regularizer(&self, shift: PriorShift) -> Result<Regularizer> {
        Ok(match self.method {
            Method::Lasso => Regularizer::Lasso,
            Method::MaxCorr => Regularizer::max_correlation(shift),
            Method::L1L1 => {
                Regularizer::l1_l1(shift.into_vector() / self.prior_weight, self.prior_weight)?
            }
            Method::L1L2 => {
                Regularizer::l1_l2(shift.into_vector() / self.prior_weight, self.prior_weight)?
            }
        })
    }

    /// Every field that determines the grid, as ordered `key=value` pairs.
    pub fn key_values(&self) -> Vec<(String, String)> {
        let s = &self.solver;
        [
            ("n", self.n.to_string()),
            ("grid_step", self.grid_step.to_string()),
            ("trials_per_cell", self.trials_per_cell.to_string()),
            ("tol", self.tol.to_string()),
            ("delta", self.delta.to_string()),
            ("case", self.case.to_string()),
            ("method", self.method.to_string()),
            ("base_seed", self.base_seed.to_string()),
            ("amplitude", self.amplitude.name().to_string()),
            ("prior_weight", self.prior_weight.to_string()),
            ("solver.rho", s.rho.to_string()),
            ("solver.max_iters", s.max_iters.to_string()),
            ("solver.tol_abs", s.tol_abs.to_string()),
            ("solver.tol_rel", s.tol_rel.to_string()),
            ("solver.divergence_guard", s.divergence_guard.to_string()),
            ("solver.adaptive_rho", s.adaptive_rho.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }

    /// Rebuilds a protocol from `key=value` lines; unknown keys are ignored.
    pub fn from_key_values(text: &str) -> Result<Self> {
        let map: BTreeMap<&str, &str> = text
            .lines()
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.trim(), v.trim()))
            .collect();
        fn get<T: FromStr>(map: &BTreeMap<&str, &str>, key: &str) -> Result<T>
        where
            T::Err: fmt::Display,
        {
            let raw = map
                .get(key)
                .ok_or_else(|| Error::invalid(format!("missing key `{key}`")))?;
            raw.parse::<T>()
                .map_err(|e| Error::invalid(format!("bad value for `{key}`: {e}")))
        }
        let protocol = PhaseProtocol {
            n: get(&map, "n")?,
            grid_step: get(&map, "grid_step")?,
            trials_per_cell: get(&map, "trials_per_cell")?,
            tol: get(&map, "tol")?,
            delta: get(&map, "delta")?,
            case: get(&map, "case")?,
            method: get(&map, "method")?,
            base_seed: get(&map, "base_seed")?,
            amplitude: get(&map, "amplitude")?,
            prior_weight: get(&map, "prior_weight")?,
            solver: SolverConfig {
                rho: get(&map, "solver.rho")?,
                max_iters: get(&map, "solver.max_iters")?,
                tol_abs: get(&map, "solver.tol_abs")?,
                tol_rel: get(&map, "solver.tol_rel")?,
                divergence_guard: get(&map, "solver.divergence_guard")?,
                adaptive_rho: get(&map, "solver.adaptive_rho")?,
            },
        };
        protocol.validate()?;
        Ok(protocol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub success: bool,
    pub status: SolveStatus,
    /// Relative error, or the absolute error when the signal is zero.
    pub error: f64,
    pub iterations: usize,
}

/// One trial of the protocol at sparsity `s` with `m` measurements.
///
/// Case (e) needs an index off the support; at `s = n` there is none and the
/// shift reduces to its on-support part `sign(x*) / 2`.
pub fn run_trial(
    protocol: &PhaseProtocol,
    s: usize,
    m: usize,
    trial_index: usize,
) -> Result<TrialOutcome> {
    let n = protocol.n;
    if s > n || m > n {
        return Err(Error::invalid(format!(
            "cell (s={s}, m={m}) outside 0..={n}"
        )));
    }
    let seed = TrialSeed {
        base_seed: protocol.base_seed,
        sparsity: s,
        measurements: m,
        trial_index,
        case: protocol.case,
    };
    let mut rng = derive_substream(&seed);
    let signal = generate_sparse_signal(n, s, protocol.amplitude, &mut rng)?;
    let a = generate_bernoulli_matrix(m, n, &mut rng)?;
    let case = if protocol.case == PriorCase::E && s == n {
        PriorCase::B
    } else {
        protocol.case
    };
    let shift = make_prior_case(case, &signal, &mut rng)?;

    let mut y = &a * signal.values();
    if protocol.delta > 0.0 && m > 0 {
        let dir = Vector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = dir.norm();
        if norm > 0.0 {
            y += dir * (protocol.delta / norm);
        }
    }
    let problem = SensingProblem::new(a, y, protocol.delta)?;
    let reg = protocol.regularizer(shift)?;
    let report = solve(&problem, &reg, &protocol.solver)?.with_ground_truth(signal.values());
    let error = report.relative_error.unwrap_or(f64::INFINITY);
    Ok(TrialOutcome {
        success: report.status != SolveStatus::Diverged && error < protocol.tol,
        status: report.status,
        error,
        iterations: report.iterations,
    })
}

/// Success counts on the `(s, m)` grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridCounts {
    pub s_axis: Vec<usize>,
    pub m_axis: Vec<usize>,
    pub trials: usize,
    /// Row-major by `s`: `counts[i * m_axis.len() + j]` is cell `(s_i, m_j)`.
    pub counts: Vec<usize>,
}

impl GridCounts {
    pub fn get(&self, si: usize, mi: usize) -> usize {
        self.counts[si * self.m_axis.len() + mi]
    }

    pub fn fraction(&self, si: usize, mi: usize) -> f64 {
        self.get(si, mi) as f64 / self.trials as f64
    }

    /// Mean success probability over all cells.
    pub fn mean_success(&self) -> f64 {
        let total: usize = self.counts.iter().sum();
        total as f64 / (self.counts.len() * self.trials) as f64
    }

    /// `s,m,successes,trials`, one row per cell sorted by `(s, m)`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,m,successes,trials\n");
        for (si, s) in self.s_axis.iter().enumerate() {
            for (mi, m) in self.m_axis.iter().enumerate() {
                out.push_str(&format!("{s},{m},{},{}\n", self.get(si, mi), self.trials));
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = reader
            .headers()
            .map_err(|e| Error::invalid(format!("grid csv: {e}")))?
            .clone();
        if header.iter().collect::<Vec<_>>() != ["s", "m", "successes", "trials"] {
            return Err(Error::invalid(
                "grid csv header must be `s,m,successes,trials`",
            ));
        }
        let mut cells = BTreeMap::new();
        let mut trials = None;
        for record in reader.records() {
            let record = record.map_err(|e| Error::invalid(format!("grid csv: {e}")))?;
            let field = |i: usize| -> Result<usize> {
                record[i]
                    .parse()
                    .map_err(|e| Error::invalid(format!("grid csv field `{}`: {e}", &record[i])))
            };
            let (s, m, k, t) = (field(0)?, field(1)?, field(2)?, field(3)?);
            if *trials.get_or_insert(t) != t {
                return Err(Error::invalid("grid csv mixes trial counts"));
            }
            if k > t {
                return Err(Error::invalid(format!(
                    "cell ({s},{m}) has {k} > {t} successes"
                )));
            }
            if cells.insert((s, m), k).is_some() {
                return Err(Error::invalid(format!("duplicate cell ({s},{m})")));
            }
        }
        let trials = trials.ok_or_else(|| Error::invalid("grid csv has no cells"))?;
        let mut s_axis: Vec<usize> = cells.keys().map(|k| k.0).collect();
        s_axis.dedup();
        let mut m_axis: Vec<usize> = cells.keys().map(|k| k.1).collect();
        m_axis.sort_unstable();
        m_axis.dedup();
        if cells.len() != s_axis.len() * m_axis.len() {
            return Err(Error::invalid("grid csv is not a full rectangular grid"));
        }
        let counts = cells.into_values().collect();
        Ok(GridCounts {
            s_axis,
            m_axis,
            trials,
            counts,
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FailureTally {
    pub max_iters: usize,
    pub diverged: usize,
}

#[derive(Debug, Clone)]
pub struct PhaseGrid {
    pub protocol: PhaseProtocol,
    pub counts: GridCounts,
    pub failures: FailureTally,
    pub timestamp_unix: u64,
    pub code_version: &'static str,
}

impl PhaseGrid {
    pub fn to_csv(&self) -> String {
        self.counts.to_csv()
    }

    /// Sidecar `key=value` text: the full protocol plus run metadata.
    pub fn sidecar(&self) -> String {
        let mut pairs = vec![("format".to_string(), "phase_grid".to_string())];
        pairs.extend(self.protocol.key_values());
        pairs.extend([
            (
                "failures.max_iters".to_string(),
                self.failures.max_iters.to_string(),
            ),
            (
                "failures.diverged".to_string(),
                self.failures.diverged.to_string(),
            ),
            ("code_version".to_string(), self.code_version.to_string()),
            (
                "timestamp_unix".to_string(),
                self.timestamp_unix.to_string(),
            ),
        ]);
        key_values(&pairs)
    }
}

/// Fills the grid using the ambient rayon pool.
pub fn run_phase_grid(protocol: &PhaseProtocol) -> Result<PhaseGrid> {
    protocol.validate()?;
    let axis = protocol.axis();
    let jobs: Vec<(usize, usize, usize)> = axis
        .iter()
        .flat_map(|&s| {
            axis.iter()
                .flat_map(move |&m| (0..protocol.trials_per_cell).map(move |t| (s, m, t)))
        })
        .collect();
    let outcomes = jobs
        .par_iter()
        .map(|&(s, m, t)| run_trial(protocol, s, m, t))
        .collect::<Result<Vec<_>>>()?;

    let mut counts = vec![0usize; axis.len() * axis.len()];
    let mut failures = FailureTally::default();
    for (cell, chunk) in outcomes.chunks(protocol.trials_per_cell).enumerate() {
        for outcome in chunk {
            counts[cell] += usize::from(outcome.success);
            match outcome.status {
                SolveStatus::MaxIters => failures.max_iters += 1,
                SolveStatus::Diverged => failures.diverged += 1,
                SolveStatus::Converged => {}
            }
        }
    }
    Ok(PhaseGrid {
        protocol: protocol.clone(),
        counts: GridCounts {
            s_axis: axis.clone(),
            m_axis: axis,
            trials: protocol.trials_per_cell,
            counts,
        },
        failures,
        timestamp_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        code_version: env!("CARGO_PKG_VERSION"),
    })
}

fn with_threads<T: Send>(threads: usize, job: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    if threads == 0 {
        return Err(Error::invalid("thread budget must be >= 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    pool.install(job)
}

/// Fills the grid on a dedicated pool of `threads` workers.
pub fn run_phase_grid_with_threads(protocol: &PhaseProtocol, threads: usize) -> Result<PhaseGrid> {
    with_threads(threads, || run_phase_grid(protocol))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContourPoint {
    pub s: usize,
    pub m_star: Option<usize>,
}

/// Transition curve at success fraction `level`.
///
/// For each `s`, `m_star` is the smallest grid `m` whose success fraction is
/// at least `level` and whose next grid point also qualifies (the last grid
/// point qualifies on its own). Rows with no such `m` give `None`.
pub fn extract_contour(grid: &GridCounts, level: f64) -> Result<Vec<ContourPoint>> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!(
            "contour level must be in (0, 1), got {level}"
        )));
    }
    let cols = grid.m_axis.len();
    Ok(grid
        .s_axis
        .iter()
        .enumerate()
        .map(|(si, &s)| {
            let ok = |mi: usize| grid.fraction(si, mi) >= level;
            let m_star = (0..cols)
                .find(|&mi| ok(mi) && (mi + 1 == cols || ok(mi + 1)))
                .map(|mi| grid.m_axis[mi]);
            ContourPoint { s, m_star }
        })
        .collect())
}

/// `s,m_star` rows; `s` values without a transition are omitted.
pub fn contour_to_csv(points: &[ContourPoint]) -> String {
    let mut out = String::from("s,m_star\n");
    for p in points {
        if let Some(m) = p.m_star {
            out.push_str(&format!("{},{m}\n", p.s));
        }
    }
    out
}

/// Transition curves of several methods on common random numbers.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub level: f64,
    pub methods: Vec<Method>,
    pub s_axis: Vec<usize>,
    /// `contours[k][i]` is `m_star` of `methods[k]` at `s_axis[i]`.
    pub contours: Vec<Vec<Option<usize>>>,
    pub grids: Vec<PhaseGrid>,
}

impl Comparison {
    pub fn contour(&self, method: Method) -> Option<&[Option<usize>]> {
        self.methods
            .iter()
            .position(|&m| m == method)
            .map(|k| self.contours[k].as_slice())
    }

    /// `s,<method>,...`; an empty field marks a missing transition.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s");
        for m in &self.methods {
            out.push(',');
            out.push_str(m.name());
        }
        out.push('\n');
        for (i, s) in self.s_axis.iter().enumerate() {
            out.push_str(&s.to_string());
            for contour in &self.contours {
                out.push(',');
                if let Some(m) = contour[i] {
                    out.push_str(&m.to_string());
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn sidecar(&self) -> String {
        let mut pairs = vec![
            ("format".to_string(), "method_comparison".to_string()),
            ("level".to_string(), self.level.to_string()),
            (
                "methods".to_string(),
                self.methods
                    .iter()
                    .map(|m| m.name())
                    .collect::<Vec<_>>()
                    .join(","),
            ),
        ];
        if let Some(first) = self.grids.first() {
            pairs.extend(
                first
                    .protocol
                    .key_values()
                    .into_iter()
                    .filter(|(k, _)| k != "method"),
            );
            pairs.push(("code_version".to_string(), first.code_version.to_string()));
            pairs.push((
                "timestamp_unix".to_string(),
                first.timestamp_unix.to_string(),
            ));
        }
        for g in &self.grids {
            let name = g.protocol.method.name();
            pairs.push((
                format!("failures.{name}.max_iters"),
                g.failures.max_iters.to_string(),
            ));
            pairs.push((
                format!("failures.{name}.diverged"),
                g.failures.diverged.to_string(),
            ));
        }
        key_values(&pairs)
    }
}

/// Runs each protocol and extracts its contour. The protocols must agree on
/// everything except the method.
pub fn compare_methods(protocols: &[PhaseProtocol], level: f64) -> Result<Comparison> {
    let first = protocols
        .first()
        .ok_or_else(|| Error::invalid("compare_methods needs at least one protocol"))?;
    for p in &protocols[1..] {
        let shared = p.n == first.n
            && p.grid_step == first.grid_step
            && p.trials_per_cell == first.trials_per_cell
            && p.tol == first.tol
            && p.base_seed == first.base_seed
            && p.case == first.case
            && p.delta == first.delta
            && p.amplitude == first.amplitude;
        if !shared {
            return Err(Error::invalid(
                "compared protocols must share n, step, trials, tol, seed, case, delta and amplitude",
            ));
        }
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!(
            "contour level must be in (0, 1), got {level}"
        )));
    }
    let grids = protocols
        .iter()
        .map(run_phase_grid)
        .collect::<Result<Vec<_>>>()?;
    let contours = grids
        .iter()
        .map(|g| {
            extract_contour(&g.counts, level).map(|c| c.into_iter().map(|p| p.m_star).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Comparison {
        level,
        methods: protocols.iter().map(|p| p.method).collect(),
        s_axis: first.axis(),
        contours,
        grids,
    })
}

/// [`compare_methods`] on a dedicated pool of `threads` workers.
pub fn compare_methods_with_threads(
    protocols: &[PhaseProtocol],
    level: f64,
    threads: usize,
) -> Result<Comparison> {
    with_threads(threads, || compare_methods(protocols, level))
}
