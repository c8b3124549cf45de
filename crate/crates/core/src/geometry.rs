//! Descent-cone geometry of `f(x) = ||x||_1 - <p, x>` at a sparse point.
//!
//! At `x*` with support `I`, the subdifferential of `f` is the shifted box
//!
//! ```text
//! S = d||x*||_1 - p:   S_i = { sign(x*_i) - p_i }      for i in I
//!                      S_i = [-1 - p_i, 1 - p_i]       for i not in I
//! ```
//!
//! When `0` is not in `S` the normal cone is `cone(S)`, and the expected
//! squared distance of a Gaussian vector to it (the statistical dimension of
//! the descent cone) obeys the closed-form bound
//! `n - (2/pi) (n - s)^2 / v`, with `v = max_{w in S} ||w||^2`.

use std::f64::consts::{FRAC_2_PI, PI};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_len, Error, Result};
use crate::model::{sign0, PriorShift, SparseSignal, Substream};
use crate::{Matrix, Vector};

/// Sub-Gaussian (psi_2) norm of a symmetric +-1 variable, `1 / sqrt(ln 2)`:
/// `E exp(1 / t^2) <= 2` holds exactly from `t^2 = 1 / ln 2`.
pub const BERNOULLI_SUBGAUSSIAN_NORM: f64 = 1.201_122_408_786_449_8;

const GOLDEN_TOL: f64 = 1e-10;
const REPAIR_MARGIN: f64 = 1e-6;
const REPAIR_ROUNDS: usize = 100;

/// A sparse point together with the prior shift, i.e. the data that fixes
/// `S`, the tangent cone and the normal cone.
#[derive(Debug, Clone)]
pub struct ConeDescriptor {
    signal: SparseSignal,
    shift: PriorShift,
    on_idx: Vec<usize>,
    /// `sign(x*_i) - p_i` for `i` in the support.
    on_dir: Vec<f64>,
    off_idx: Vec<usize>,
    /// `(-1 - p_i, 1 - p_i)` for `i` off the support.
    off_box: Vec<(f64, f64)>,
}

impl ConeDescriptor {
    pub fn new(signal: SparseSignal, shift: PriorShift) -> Result<Self> {
        check_len("cone shift vs signal", signal.dim(), shift.dim())?;
        let mask = signal.support_mask();
        let p = shift.as_vector();
        let x = signal.values();
        let mut on_idx = Vec::new();
        let mut on_dir = Vec::new();
        let mut off_idx = Vec::new();
        let mut off_box = Vec::new();
        for i in 0..signal.dim() {
            if mask[i] {
                on_idx.push(i);
                on_dir.push(sign0(x[i]) - p[i]);
            } else {
                off_idx.push(i);
                off_box.push((-1.0 - p[i], 1.0 - p[i]));
            }
        }
        Ok(ConeDescriptor {
            signal,
            shift,
            on_idx,
            on_dir,
            off_idx,
            off_box,
        })
    }

    pub fn from_slices(signal: &[f64], shift: &[f64]) -> Result<Self> {
        Self::new(
            SparseSignal::from_slice(signal),
            PriorShift::from_slice(shift),
        )
    }

    pub fn signal(&self) -> &SparseSignal {
        &self.signal
    }

    pub fn shift(&self) -> &PriorShift {
        &self.shift
    }

    pub fn dim(&self) -> usize {
        self.signal.dim()
    }

    pub fn sparsity(&self) -> usize {
        self.signal.sparsity()
    }

    /// `f(x) = ||x||_1 - <p, x>`.
    pub fn objective(&self, x: &Vector) -> f64 {
        x.lp_norm(1) - self.shift.as_vector().dot(x)
    }

    fn require_valid(&self) -> Result<()> {
        if zero_in_shifted_subdiff(self) {
            Err(Error::ZeroInShiftedSubdifferential)
        } else {
            Ok(())
        }
    }
}

/// `v = max_{w in S} ||w||_2^2`.
///
/// Per coordinate: `(sign(x*_i) - p_i)^2` on the support; off the support the
/// farther interval end, `(1 - p_i)^2` when `p_i < 0` and `(1 + p_i)^2`
/// otherwise.
pub fn compute_v(cone: &ConeDescriptor) -> f64 {
    let on: f64 = cone.on_dir.iter().map(|w| w * w).sum();
    let p = cone.shift.as_vector();
    let off: f64 = cone
        .off_idx
        .iter()
        .map(|&i| {
            let pi = p[i];
            if pi < 0.0 {
                (1.0 - pi) * (1.0 - pi)
            } else {
                (1.0 + pi) * (1.0 + pi)
            }
        })
        .sum();
    on + off
}

/// Whether `0` lies in the shifted subdifferential: `p_i = sign(x*_i)` on the
/// support and `|p_i| <= 1` off it.
pub fn zero_in_shifted_subdiff(cone: &ConeDescriptor) -> bool {
    cone.on_dir.iter().all(|&w| w == 0.0)
        && cone.off_box.iter().all(|&(lo, hi)| lo <= 0.0 && 0.0 <= hi)
}

/// Upper bound on the squared Gaussian width of the descent cone,
/// `n (1 - (n / v)(2 / pi)(1 - s/n)^2)`, clamped at zero.
pub fn width_bound_sq(n: usize, s: usize, v: f64) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::invalid(format!("v must be > 0, got {v}")));
    }
    if s > n {
        return Err(Error::invalid(format!(
            "sparsity {s} exceeds dimension {n}"
        )));
    }
    let nf = n as f64;
    let frac = 1.0 - s as f64 / nf.max(1.0);
    Ok((nf * (1.0 - (nf / v) * FRAC_2_PI * frac * frac)).max(0.0))
}

/// Minimizer `t* = sqrt(2/pi) (n - s) / v` of the quadratic
/// `n - 2 t sqrt(2/pi)(n - s) + t^2 v`.
pub fn optimal_quadratic_t(n: usize, s: usize, v: f64) -> f64 {
    FRAC_2_PI.sqrt() * (n - s) as f64 / v
}

/// `n - 2 t sqrt(2/pi)(n - s) + t^2 v` evaluated at [`optimal_quadratic_t`].
pub fn quadratic_bound(n: usize, s: usize, v: f64) -> f64 {
    let t = optimal_quadratic_t(n, s, v);
    let nf = n as f64;
    nf - 2.0 * t * FRAC_2_PI.sqrt() * (n - s) as f64 + t * t * v
}

/// Predicted measurement count `(C K^2 sqrt(width_sq) + eps)^2`.
///
/// The absolute constants are not known numerically; callers supply them.
pub fn sample_size_bound(width_sq: f64, k: f64, c: f64, eps: f64) -> Result<f64> {
    if !(width_sq >= 0.0) || !(k > 0.0) || !(c > 0.0) || !(eps >= 0.0) {
        return Err(Error::invalid(format!(
            "sample_size_bound needs width_sq >= 0, K > 0, C > 0, eps >= 0; got {width_sq}, {k}, {c}, {eps}"
        )));
    }
    let root = c * k * k * width_sq.sqrt() + eps;
    Ok(root * root)
}

/// `gamma(E) <= 2 w(E) + ||y||_2` for any `y` in `E`.
pub fn gamma_upper_from_width(width: f64, witness_norm: f64) -> Result<f64> {
    if !(width >= 0.0) || !(witness_norm >= 0.0) {
        return Err(Error::invalid("width and witness norm must be >= 0"));
    }
    Ok(2.0 * width + witness_norm)
}

/// `F(t) = dist(g, t S)^2`.
///
/// Off the support the closest point of `t [lo, hi]` is the clamp of `g_i`,
/// so each coordinate contributes its squared distance to that interval.
pub fn shifted_cone_objective(g: &Vector, cone: &ConeDescriptor, t: f64) -> f64 {
    let on: f64 = cone
        .on_idx
        .iter()
        .zip(&cone.on_dir)
        .map(|(&i, &w)| {
            let r = g[i] - t * w;
            r * r
        })
        .sum();
    let off: f64 = cone
        .off_idx
        .iter()
        .zip(&cone.off_box)
        .map(|(&i, &(lo, hi))| {
            let gi = g[i];
            let r = gi - gi.clamp(t * lo, t * hi);
            r * r
        })
        .sum();
    on + off
}

/// Result of minimizing `F(t)` over `t >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeProjection {
    pub t: f64,
    pub dist_sq: f64,
}

/// `min_{t >= 0} F(t)`: bracket by doubling from `t = 1` until `F` rises,
/// then golden-section search.
pub fn dist_sq_to_normal_cone(g: &Vector, cone: &ConeDescriptor) -> Result<ConeProjection> {
    check_len("Gaussian vector vs cone dimension", cone.dim(), g.len())?;
    cone.require_valid()?;
    let f = |t: f64| shifted_cone_objective(g, cone, t);

    let f0 = f(0.0);
    let mut best = ConeProjection {
        t: 0.0,
        dist_sq: f0,
    };
    let consider = |t: f64, v: f64, best: &mut ConeProjection| {
        if v < best.dist_sq {
            *best = ConeProjection { t, dist_sq: v };
        }
    };

    let (mut lo, mut hi);
    let f1 = f(1.0);
    consider(1.0, f1, &mut best);
    if f1 >= f0 {
        lo = 0.0;
        hi = 1.0;
    } else {
        let mut prev = 0.0;
        let mut mid = 1.0;
        let mut f_mid = f1;
        let mut next = 2.0;
        let mut f_next = f(next);
        consider(next, f_next, &mut best);
        // F grows without bound when 0 is outside S, so this terminates.
        while f_next < f_mid && next < 1e300 {
            prev = mid;
            mid = next;
            f_mid = f_next;
            next *= 2.0;
            f_next = f(next);
            consider(next, f_next, &mut best);
        }
        lo = prev;
        hi = next;
    }

    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..400 {
        if hi - lo <= GOLDEN_TOL * hi.max(f64::MIN_POSITIVE) {
            break;
        }
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    consider(c, fc, &mut best);
    consider(d, fd, &mut best);
    let mid = 0.5 * (lo + hi);
    consider(mid, f(mid), &mut best);
    Ok(best)
}

/// `dist(g, N_f)` with `N_f = cone(S)`.
pub fn dist_to_normal_cone(g: &Vector, cone: &ConeDescriptor) -> Result<f64> {
    Ok(dist_sq_to_normal_cone(g, cone)?.dist_sq.sqrt())
}

/// Monte-Carlo estimate of `E dist(g, N_f)^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WidthEstimate {
    pub mean_sq_dist: f64,
    pub std_error: f64,
    pub samples: usize,
    /// `n - (2/pi)(n - s)^2 / v`, the value of the quadratic bound at its
    /// optimal `t`.
    pub closed_form_bound: f64,
}

pub fn mc_width_estimate(
    cone: &ConeDescriptor,
    samples: usize,
    rng: &mut Substream,
) -> Result<WidthEstimate> {
    cone.require_valid()?;
    if samples < 2 {
        return Err(Error::invalid(
            "Monte-Carlo estimate needs at least 2 samples",
        ));
    }
    let n = cone.dim();
    let mut g = Vector::zeros(n);
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for k in 1..=samples {
        for gi in g.iter_mut() {
            *gi = rng.sample(StandardNormal);
        }
        let d = dist_sq_to_normal_cone(&g, cone)?.dist_sq;
        // Welford update
        let delta = d - mean;
        mean += delta / k as f64;
        m2 += delta * (d - mean);
    }
    let var = m2 / (samples - 1) as f64;
    Ok(WidthEstimate {
        mean_sq_dist: mean,
        std_error: (var / samples as f64).sqrt(),
        samples,
        closed_form_bound: quadratic_bound(n, cone.sparsity(), compute_v(cone)),
    })
}

/// One-sided directional derivative
/// `f'(x*; d) = sum_I sign(x*_i) d_i + sum_{I^c} |d_i| - <p, d>`.
pub fn directional_derivative(cone: &ConeDescriptor, d: &Vector) -> Result<f64> {
    check_len("direction vs cone dimension", cone.dim(), d.len())?;
    Ok(directional_derivative_unchecked(cone, d))
}

fn directional_derivative_unchecked(cone: &ConeDescriptor, d: &Vector) -> f64 {
    let on: f64 = cone
        .on_idx
        .iter()
        .zip(&cone.on_dir)
        .map(|(&i, &w)| w * d[i])
        .sum();
    let p = cone.shift.as_vector();
    let off: f64 = cone.off_idx.iter().map(|&i| d[i].abs() - p[i] * d[i]).sum();
    on + off
}

/// Smallest `||A h||_2` over sampled unit descent directions `h`.
///
/// This is an upper bound on the restricted infimum over the whole
/// `T_f ∩ S^{n-1}`. Gaussian draws outside the cone are pushed back along the
/// active subgradient `q` (`d <- d - ((f'(d) + margin) / ||q||^2) q`), a few
/// rounds at most; draws that still fail are discarded.
pub fn empirical_restricted_infimum(
    cone: &ConeDescriptor,
    a: &Matrix,
    samples: usize,
    rng: &mut Substream,
) -> Result<f64> {
    cone.require_valid()?;
    check_len("matrix columns vs cone dimension", cone.dim(), a.ncols())?;
    if samples == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    let n = cone.dim();
    let p = cone.shift.as_vector();
    let mut d = Vector::zeros(n);
    let mut q = Vector::zeros(n);
    for (&i, &w) in cone.on_idx.iter().zip(&cone.on_dir) {
        q[i] = w;
    }
    let mut best = f64::INFINITY;
    let mut accepted = 0;
    for _ in 0..samples {
        for di in d.iter_mut() {
            *di = rng.sample(StandardNormal);
        }
        let mut slope = directional_derivative_unchecked(cone, &d);
        let mut rounds = 0;
        while slope > 0.0 && rounds < REPAIR_ROUNDS {
            for &i in &cone.off_idx {
                q[i] = sign0(d[i]) - p[i];
            }
            let step = (slope + REPAIR_MARGIN) / q.norm_squared();
            d.axpy(-step, &q, 1.0);
            slope = directional_derivative_unchecked(cone, &d);
            rounds += 1;
        }
        let norm = d.norm();
        if slope > 0.0 || norm == 0.0 {
            continue;
        }
        accepted += 1;
        best = best.min((a * &d).norm() / norm);
    }
    if 2 * accepted < samples {
        return Err(Error::SamplerDegenerate {
            accepted,
            attempted: samples,
        });
    }
    Ok(best)
}

/// `E max_{w in S} <g, w> = sqrt(2/pi)(n - s)`, the Gaussian mean width term
/// of the quadratic bound.
pub fn expected_support_term(n: usize, s: usize) -> f64 {
    (2.0 / PI).sqrt() * (n - s) as f64
}
