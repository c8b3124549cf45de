//! Proximal operators for the four objectives and the Euclidean ball
//! projection used for the data-fidelity constraint.
//!
//! Every operator computes
//!
//! ```text
//! prox_{t f}(q) = argmin_w  f(w) + ||w - q||^2 / (2 t)
//! ```
//!
//! coordinatewise, since all four objectives are separable.

use crate::error::{check_len, Error, Result};
use crate::model::PriorShift;
use crate::Vector;

/// Objective `f` of the constrained recovery program.
#[derive(Debug, Clone, PartialEq)]
pub enum Regularizer {
    /// `||x||_1`.
    Lasso,
    /// `||x||_1 - <p, x>` with `p = lambda * phi`.
    MaxCorrelation { shift: PriorShift },
    /// `||x||_1 + lambda ||x - phi||_1`.
    L1L1 { prior: Vector, weight: f64 },
    /// `||x||_1 + (lambda / 2) ||x - phi||_2^2`.
    L1L2 { prior: Vector, weight: f64 },
}

impl Regularizer {
    pub fn max_correlation(shift: PriorShift) -> Self {
        Regularizer::MaxCorrelation { shift }
    }

    pub fn l1_l1(prior: Vector, weight: f64) -> Result<Self> {
        check_weight(weight)?;
        Ok(Regularizer::L1L1 { prior, weight })
    }

    pub fn l1_l2(prior: Vector, weight: f64) -> Result<Self> {
        check_weight(weight)?;
        Ok(Regularizer::L1L2 { prior, weight })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Regularizer::Lasso => "lasso",
            Regularizer::MaxCorrelation { .. } => "max_corr",
            Regularizer::L1L1 { .. } => "l1_l1",
            Regularizer::L1L2 { .. } => "l1_l2",
        }
    }

    /// Dimension the regularizer is tied to, if any.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Regularizer::Lasso => None,
            Regularizer::MaxCorrelation { shift } => Some(shift.dim()),
            Regularizer::L1L1 { prior, .. } | Regularizer::L1L2 { prior, .. } => Some(prior.len()),
        }
    }

    pub fn check_dim(&self, n: usize) -> Result<()> {
        match self.dim() {
            Some(d) => check_len("regularizer dimension", n, d),
            None => Ok(()),
        }
    }

    pub fn objective(&self, x: &Vector) -> f64 {
        let l1 = x.lp_norm(1);
        match self {
            Regularizer::Lasso => l1,
            Regularizer::MaxCorrelation { shift } => l1 - shift.as_vector().dot(x),
            Regularizer::L1L1 { prior, weight } => l1 + weight * (x - prior).lp_norm(1),
            Regularizer::L1L2 { prior, weight } => l1 + 0.5 * weight * (x - prior).norm_squared(),
        }
    }

    /// One subgradient of the objective at `x`, choosing `sign(0) = 0`.
    pub fn subgradient(&self, x: &Vector) -> Vector {
        let sign = |v: f64| crate::model::sign0(v);
        match self {
            Regularizer::Lasso => x.map(sign),
            Regularizer::MaxCorrelation { shift } => x.map(sign) - shift.as_vector(),
            Regularizer::L1L1 { prior, weight } => {
                Vector::from_fn(x.len(), |i, _| sign(x[i]) + weight * sign(x[i] - prior[i]))
            }
            Regularizer::L1L2 { prior, weight } => {
                Vector::from_fn(x.len(), |i, _| sign(x[i]) + weight * (x[i] - prior[i]))
            }
        }
    }

    /// Writes `prox_{t f}(q)` into `out`. Dimensions must already agree.
    pub(crate) fn prox_into(&self, q: &Vector, t: f64, out: &mut Vector) {
        match self {
            Regularizer::Lasso => {
                for (o, &qi) in out.iter_mut().zip(q.iter()) {
                    *o = soft_threshold(qi, t);
                }
            }
            Regularizer::MaxCorrelation { shift } => {
                for ((o, &qi), &pi) in out.iter_mut().zip(q.iter()).zip(shift.as_vector().iter()) {
                    *o = soft_threshold(qi + t * pi, t);
                }
            }
            Regularizer::L1L1 { prior, weight } => {
                for ((o, &qi), &phi) in out.iter_mut().zip(q.iter()).zip(prior.iter()) {
                    *o = prox_l1_l1_scalar(qi, t, phi, *weight);
                }
            }
            Regularizer::L1L2 { prior, weight } => {
                for ((o, &qi), &phi) in out.iter_mut().zip(q.iter()).zip(prior.iter()) {
                    *o = prox_l1_l2_scalar(qi, t, phi, *weight);
                }
            }
        }
    }

    pub fn prox(&self, q: &Vector, t: f64) -> Result<Vector> {
        check_step(t)?;
        self.check_dim(q.len())?;
        let mut out = Vector::zeros(q.len());
        self.prox_into(q, t, &mut out);
        Ok(out)
    }
}

fn check_step(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "prox step must be finite and > 0, got {t}"
        )))
    }
}

fn check_weight(weight: f64) -> Result<()> {
    if weight >= 0.0 && weight.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "prior weight must be finite and >= 0, got {weight}"
        )))
    }
}

#[inline]
pub fn soft_threshold(q: f64, t: f64) -> f64 {
    if q > t {
        q - t
    } else if q < -t {
        q + t
    } else {
        0.0
    }
}

#[inline]
pub fn prox_l1_l2_scalar(q: f64, t: f64, phi: f64, weight: f64) -> f64 {
    let scale = 1.0 + t * weight;
    soft_threshold((q + t * weight * phi) / scale, t / scale)
}

/// Minimizer of `|w| + weight |w - phi| + (w - q)^2 / (2 t)`.
///
/// The minimizer sits either at a kink (`0` or `phi`) or at the stationary
/// point of one of the four smooth pieces, so the best of those six
/// candidates is exact.
#[inline]
pub fn prox_l1_l1_scalar(q: f64, t: f64, phi: f64, weight: f64) -> f64 {
    let objective = |w: f64| w.abs() + weight * (w - phi).abs() + (w - q) * (w - q) / (2.0 * t);
    let candidates = [
        0.0,
        phi,
        q - t * (1.0 + weight),
        q - t * (1.0 - weight),
        q + t * (1.0 + weight),
        q + t * (1.0 - weight),
    ];
    let mut best = candidates[0];
    let mut best_val = objective(best);
    for &w in &candidates[1..] {
        let val = objective(w);
        if val < best_val {
            best = w;
            best_val = val;
        }
    }
    best
}

/// Soft thresholding `sign(q_i) max(|q_i| - t, 0)`.
pub fn prox_l1(q: &Vector, t: f64) -> Result<Vector> {
    Regularizer::Lasso.prox(q, t)
}

/// Prox of `||w||_1 - <p, w>`, i.e. `prox_l1(q + t p, t)`.
pub fn prox_max_corr(q: &Vector, t: f64, shift: &PriorShift) -> Result<Vector> {
    check_len("prox_max_corr shift", q.len(), shift.dim())?;
    Regularizer::MaxCorrelation {
        shift: shift.clone(),
    }
    .prox(q, t)
}

pub fn prox_l1_l2(q: &Vector, t: f64, prior: &Vector, weight: f64) -> Result<Vector> {
    check_len("prox_l1_l2 prior", q.len(), prior.len())?;
    Regularizer::l1_l2(prior.clone(), weight)?.prox(q, t)
}

pub fn prox_l1_l1(q: &Vector, t: f64, prior: &Vector, weight: f64) -> Result<Vector> {
    check_len("prox_l1_l1 prior", q.len(), prior.len())?;
    Regularizer::l1_l1(prior.clone(), weight)?.prox(q, t)
}

/// Euclidean projection of `z` onto the ball of radius `radius` around
/// `center`. A zero radius returns the center.
pub fn project_l2_ball(z: &Vector, center: &Vector, radius: f64) -> Result<Vector> {
    check_len("ball projection", center.len(), z.len())?;
    if !(radius >= 0.0) {
        return Err(Error::invalid(format!(
            "ball radius must be >= 0, got {radius}"
        )));
    }
    let mut out = z.clone();
    project_l2_ball_in_place(&mut out, center, radius);
    Ok(out)
}

pub(crate) fn project_l2_ball_in_place(z: &mut Vector, center: &Vector, radius: f64) {
    if radius == 0.0 {
        z.copy_from(center);
        return;
    }
    let dist = z.metric_distance(center);
    if dist > radius {
        let scale = radius / dist;
        for (zi, &ci) in z.iter_mut().zip(center.iter()) {
            *zi = ci + scale * (*zi - ci);
        }
    }
}

/// Brute-force scalar prox: the minimizer of `objective(w) + (w - q)^2/(2t)`
/// over the grid `[-10 R, 10 R]` with spacing `1e-5 R`, `R = max(1, |q|, t)`.
///
/// Reference implementation for tests; it shares nothing with the closed
/// forms above.
pub fn prox_oracle_1d<F: Fn(f64) -> f64>(objective: F, q: f64, t: f64) -> f64 {
    let r = 1.0_f64.max(q.abs()).max(t);
    let step = 1e-5 * r;
    let half = 1_000_000_i64;
    let mut best_w = 0.0;
    let mut best_val = f64::INFINITY;
    for k in -half..=half {
        let w = k as f64 * step;
        let val = objective(w) + (w - q) * (w - q) / (2.0 * t);
        if val < best_val {
            best_val = val;
            best_w = w;
        }
    }
    best_w
}
