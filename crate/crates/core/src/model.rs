//! Domain types, random instance generation and the counter-based seeding
//! scheme shared by all experiments.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{check_len, Error, Result};
use crate::{Matrix, Vector};

/// Random stream handed to every generator. ChaCha output is stable across
/// platforms and crate releases, which keeps phase grids byte-reproducible.
pub type Substream = ChaCha8Rng;

/// Sparse ground-truth vector with its support.
///
/// The support is always exactly `{i : values[i] != 0}`, so the type can only
/// be built from the values themselves.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSignal {
    values: Vector,
    support: Vec<usize>,
}

impl SparseSignal {
    pub fn new(values: Vector) -> Self {
        let support = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| i)
            .collect();
        SparseSignal { values, support }
    }

    pub fn from_slice(values: &[f64]) -> Self {
        Self::new(Vector::from_column_slice(values))
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(Vector::zeros(n))
    }

    pub fn values(&self) -> &Vector {
        &self.values
    }

    /// Sorted indices of the nonzero entries.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Membership mask for the support, one flag per coordinate.
    pub fn support_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.dim()];
        for &i in &self.support {
            mask[i] = true;
        }
        mask
    }

    /// `sign(x*)` with `sign(0) = 0`.
    pub fn sign(&self) -> Vector {
        self.values.map(sign0)
    }
}

pub(crate) fn sign0(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// The combined prior shift `p = lambda * phi`.
///
/// Both the correlation objective and all cone geometry depend on the prior
/// only through this product, so the tradeoff weight is never stored apart.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorShift(Vector);

impl PriorShift {
    pub fn new(shift: Vector) -> Self {
        PriorShift(shift)
    }

    pub fn from_slice(values: &[f64]) -> Self {
        PriorShift(Vector::from_column_slice(values))
    }

    pub fn zeros(n: usize) -> Self {
        PriorShift(Vector::zeros(n))
    }

    pub fn as_vector(&self) -> &Vector {
        &self.0
    }

    pub fn into_vector(self) -> Vector {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// The index set `J = {i : p_i < 0}`.
    pub fn negative_indices(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, v)| **v < 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.amax()
    }
}

/// Measurement matrix, observation and noise bound for
/// `||y - A x||_2 <= delta`.
#[derive(Debug, Clone)]
pub struct SensingProblem {
    matrix: Matrix,
    observation: Vector,
    noise_bound: f64,
}

impl SensingProblem {
    pub fn new(matrix: Matrix, observation: Vector, noise_bound: f64) -> Result<Self> {
        if !(noise_bound >= 0.0) || !noise_bound.is_finite() {
            return Err(Error::invalid(format!(
                "noise bound must be finite and >= 0, got {noise_bound}"
            )));
        }
        check_len(
            "observation length vs matrix rows",
            matrix.nrows(),
            observation.len(),
        )?;
        Ok(SensingProblem {
            matrix,
            observation,
            noise_bound,
        })
    }

    /// Noiseless observation `y = A x`.
    pub fn noiseless(matrix: Matrix, signal: &Vector) -> Result<Self> {
        check_len(
            "signal length vs matrix columns",
            matrix.ncols(),
            signal.len(),
        )?;
        let y = &matrix * signal;
        Self::new(matrix, y, 0.0)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn observation(&self) -> &Vector {
        &self.observation
    }

    pub fn noise_bound(&self) -> f64 {
        self.noise_bound
    }

    /// Number of measurements `m`.
    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    /// Signal dimension `n`.
    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    /// Same feasible set, with `(A, y, delta)` all multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::invalid(format!("scale must be > 0, got {c}")));
        }
        Self::new(
            &self.matrix * c,
            &self.observation * c,
            self.noise_bound * c,
        )
    }
}

/// The six prior-shift scenarios of the phase-transition study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PriorCase {
    /// No prior: `p = 0`.
    A,
    /// Good shift on the support: `p = sign(x*) / 2`.
    B,
    /// Bad shift on the support: `p = -sign(x*) / 2`.
    C,
    /// Shift on the complement: `p_I = 0`, `p_{I^c} = 1`.
    D,
    /// `p_I = sign(x*_I) / 2`, and `p_i = 1/4` at one random off-support index.
    E,
    /// `p_I = -sign(x*_I) / 2`, `p_{I^c} = 1`.
    F,
}

impl PriorCase {
    pub const ALL: [PriorCase; 6] = [
        PriorCase::A,
        PriorCase::B,
        PriorCase::C,
        PriorCase::D,
        PriorCase::E,
        PriorCase::F,
    ];

    pub fn tag(self) -> char {
        match self {
            PriorCase::A => 'a',
            PriorCase::B => 'b',
            PriorCase::C => 'c',
            PriorCase::D => 'd',
            PriorCase::E => 'e',
            PriorCase::F => 'f',
        }
    }

    fn code(self) -> u64 {
        self.tag() as u64
    }

    /// Closed-form `v` for an `s`-sparse signal in dimension `n`.
    pub fn closed_form_v(self, n: usize, s: usize) -> f64 {
        let (n, s) = (n as f64, s as f64);
        match self {
            PriorCase::A => n,
            PriorCase::B => n - 0.75 * s,
            PriorCase::C => n + 1.25 * s,
            PriorCase::D => 4.0 * n - 3.0 * s,
            PriorCase::E => n - 0.75 * s + 9.0 / 16.0,
            PriorCase::F => 4.0 * n - 1.75 * s,
        }
    }
}

impl fmt::Display for PriorCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.tag())
    }
}

impl FromStr for PriorCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a" => Ok(PriorCase::A),
            "b" => Ok(PriorCase::B),
            "c" => Ok(PriorCase::C),
            "d" => Ok(PriorCase::D),
            "e" => Ok(PriorCase::E),
            "f" => Ok(PriorCase::F),
            other => Err(Error::invalid(format!(
                "unknown prior case `{other}` (expected a..f)"
            ))),
        }
    }
}

/// Distribution of the nonzero amplitudes of a random sparse signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Amplitude {
    #[default]
    StandardNormal,
    Rademacher,
}

impl Amplitude {
    pub fn name(self) -> &'static str {
        match self {
            Amplitude::StandardNormal => "standard_normal",
            Amplitude::Rademacher => "rademacher",
        }
    }
}

impl FromStr for Amplitude {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "standard_normal" | "gaussian" => Ok(Amplitude::StandardNormal),
            "rademacher" => Ok(Amplitude::Rademacher),
            other => Err(Error::invalid(format!("unknown amplitude law `{other}`"))),
        }
    }
}

/// Coordinates of one trial's random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TrialSeed {
    pub base_seed: u64,
    pub sparsity: usize,
    pub measurements: usize,
    pub trial_index: usize,
    pub case: PriorCase,
}

impl TrialSeed {
    /// 64-bit key obtained by folding every coordinate through SplitMix64.
    pub fn key(&self) -> u64 {
        [
            self.sparsity as u64,
            self.measurements as u64,
            self.trial_index as u64,
            self.case.code(),
        ]
        .iter()
        .fold(splitmix64(self.base_seed), |h, &c| splitmix64(h ^ c))
    }
}

/// SplitMix64 finalizer applied to `z + golden_gamma`.
pub fn splitmix64(z: u64) -> u64 {
    let mut z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent, reproducible stream for one trial.
pub fn derive_substream(seed: &TrialSeed) -> Substream {
    Substream::seed_from_u64(seed.key())
}

/// Stream for stand-alone computations keyed by a single seed.
pub fn substream_from_seed(seed: u64) -> Substream {
    Substream::seed_from_u64(splitmix64(seed))
}

/// Random `s`-sparse vector: uniformly chosen distinct support, i.i.d.
/// amplitudes drawn from `amplitude`.
pub fn generate_sparse_signal(
    n: usize,
    s: usize,
    amplitude: Amplitude,
    rng: &mut Substream,
) -> Result<SparseSignal> {
    if s > n {
        return Err(Error::invalid(format!(
            "sparsity {s} exceeds dimension {n}"
        )));
    }
    let mut support = rand::seq::index::sample(rng, n, s).into_vec();
    support.sort_unstable();
    let mut values = Vector::zeros(n);
    for i in support {
        values[i] = match amplitude {
            Amplitude::StandardNormal => loop {
                let v: f64 = rng.sample(StandardNormal);
                if v != 0.0 {
                    break v;
                }
            },
            Amplitude::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        };
    }
    Ok(SparseSignal::new(values))
}

/// `m x n` matrix with i.i.d. entries uniform on `{+1, -1}`.
///
/// Rows are centered and isotropic. `m = 0` is allowed and yields the empty
/// matrix used by the boundary row of a phase grid.
pub fn generate_bernoulli_matrix(m: usize, n: usize, rng: &mut Substream) -> Result<Matrix> {
    if n == 0 {
        return Err(Error::invalid("matrix must have at least one column"));
    }
    // Fill row by row so the draw order matches the row-major CSV layout.
    let mut a = Matrix::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            a[(i, j)] = if rng.random::<bool>() { 1.0 } else { -1.0 };
        }
    }
    Ok(a)
}

/// Prior shift `p = lambda * phi` for one of the six study cases.
pub fn make_prior_case(
    case: PriorCase,
    signal: &SparseSignal,
    rng: &mut Substream,
) -> Result<PriorShift> {
    let n = signal.dim();
    let sign = signal.sign();
    let mask = signal.support_mask();
    let p = match case {
        PriorCase::A => Vector::zeros(n),
        PriorCase::B => sign * 0.5,
        PriorCase::C => sign * -0.5,
        PriorCase::D => Vector::from_fn(n, |i, _| if mask[i] { 0.0 } else { 1.0 }),
        PriorCase::E => {
            let off: Vec<usize> = (0..n).filter(|&i| !mask[i]).collect();
            if off.is_empty() {
                return Err(Error::invalid(
                    "case e needs at least one index outside the support",
                ));
            }
            let pick = off[rng.random_range(0..off.len())];
            let mut p = sign * 0.5;
            p[pick] = 0.25;
            p
        }
        PriorCase::F => Vector::from_fn(n, |i, _| if mask[i] { -0.5 * sign[i] } else { 1.0 }),
    };
    Ok(PriorShift(p))
}
