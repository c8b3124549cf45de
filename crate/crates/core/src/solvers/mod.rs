//! Solvers for `min f(x) s.t. ||A x - y||_2 <= delta`.
//!
//! [`solve`] is the production path: an operator-splitting scheme whose
//! subproblems are all closed form. [`solve_subgradient_oracle`] is a slow,
//! independent projected-subgradient method kept as a cross-check.

mod admm;
mod subgradient;

use std::fmt;
use std::str::FromStr;

pub use admm::solve;
pub use subgradient::{solve_subgradient_oracle, OracleSolution};

use crate::error::{check_len, Error, Result};
use crate::model::SensingProblem;
use crate::Vector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Initial penalty parameter.
    pub rho: f64,
    pub max_iters: usize,
    pub tol_abs: f64,
    pub tol_rel: f64,
    /// `||x||_2` above this value stops the run with [`SolveStatus::Diverged`].
    pub divergence_guard: f64,
    /// Residual balancing: scale `rho` by 2 whenever one residual exceeds the
    /// other by a factor of 10. Checked every 10 sweeps, at most 50 times.
    pub adaptive_rho: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rho: 1.0,
            max_iters: 5000,
            tol_abs: 1e-6,
            tol_rel: 1e-5,
            divergence_guard: 1e8,
            adaptive_rho: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!(
                    "{name} must be finite and > 0, got {v}"
                )))
            }
        };
        positive("rho", self.rho)?;
        positive("tol_abs", self.tol_abs)?;
        positive("tol_rel", self.tol_rel)?;
        positive("divergence_guard", self.divergence_guard)?;
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Converged,
    MaxIters,
    Diverged,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIters => "max_iters",
            SolveStatus::Diverged => "diverged",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolveStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "converged" => Ok(SolveStatus::Converged),
            "max_iters" => Ok(SolveStatus::MaxIters),
            "diverged" => Ok(SolveStatus::Diverged),
            other => Err(Error::invalid(format!("unknown solve status `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: Vector,
    pub objective_value: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub status: SolveStatus,
    /// Final penalty parameter after residual balancing.
    pub rho: f64,
    /// `||x_hat - x*||_2 / ||x*||_2`, filled by [`SolveReport::with_ground_truth`].
    pub relative_error: Option<f64>,
}

impl SolveReport {
    /// Records the relative error against a known signal. For the zero signal
    /// the absolute error is stored instead.
    pub fn with_ground_truth(mut self, truth: &Vector) -> Self {
        let err = (&self.solution - truth).norm();
        let scale = truth.norm();
        self.relative_error = Some(if scale > 0.0 { err / scale } else { err });
        self
    }
}

/// `||A x - y||_2 - delta`; nonpositive (up to roundoff) means feasible.
pub fn check_feasibility(problem: &SensingProblem, x: &Vector) -> Result<f64> {
    check_len(
        "candidate length vs matrix columns",
        problem.cols(),
        x.len(),
    )?;
    let r = problem.matrix() * x - problem.observation();
    Ok(r.norm() - problem.noise_bound())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Matrix;

    #[test]
    fn feasibility_of_truth_and_origin() {
        let a = Matrix::from_row_slice(2, 3, &[1.0, -1.0, 1.0, 1.0, 1.0, -1.0]);
        let x = Vector::from_column_slice(&[0.5, 0.0, -2.0]);
        let problem = SensingProblem::noiseless(a, &x).unwrap();
        assert!(check_feasibility(&problem, &x).unwrap().abs() < 1e-12);
        let gap = check_feasibility(&problem, &Vector::zeros(3)).unwrap();
        assert!((gap - problem.observation().norm()).abs() < 1e-15);
        assert!(check_feasibility(&problem, &Vector::zeros(2)).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = SolverConfig {
            max_iters: 0,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig {
            tol_abs: 0.0,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
