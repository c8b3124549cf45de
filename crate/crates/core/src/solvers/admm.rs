use crate::error::Result;
use crate::model::SensingProblem;
use crate::prox::{project_l2_ball_in_place, Regularizer};
use crate::solvers::{SolveReport, SolveStatus, SolverConfig};
use crate::{Matrix, Vector};

/// Residual balancing is checked every `RHO_INTERVAL` sweeps and stops after
/// `MAX_RHO_UPDATES` changes; an unbounded number of penalty changes can keep
/// the iteration from settling.
const RHO_INTERVAL: usize = 10;
const MAX_RHO_UPDATES: usize = 50;

/// Splitting solver for `min f(x) s.t. ||A x - y||_2 <= delta`.
///
/// The problem is rewritten with copies `w = x` (carrying `f`) and `z = A x`
/// (carrying the ball constraint). With scaled duals `u_w`, `u_z` one sweep is
///
/// ```text
/// x   = (I + A^T A)^{-1} [ (w - u_w) + A^T (z - u_z) ]
/// w   = prox_{f / rho}(x + u_w)
/// z   = Proj_{B(y, delta)}(A x + u_z)
/// u_w += x - w,   u_z += A x - z
/// ```
///
/// The Cholesky factor of `I + A^T A` does not depend on `rho`, so it is
/// computed once. The returned solution is `w`, which carries the exact zeros
/// produced by the prox.
pub fn solve(
    problem: &SensingProblem,
    reg: &Regularizer,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    cfg.validate()?;
    let n = problem.cols();
    let m = problem.rows();
    reg.check_dim(n)?;

    let a = problem.matrix();
    let y = problem.observation();
    let delta = problem.noise_bound();

    let mut gram = Matrix::identity(n, n);
    gram.gemm_tr(1.0, a, a, 1.0);
    let chol = gram
        .cholesky()
        .expect("I + A^T A is symmetric positive definite");

    let mut x = Vector::zeros(n);
    let mut w = Vector::zeros(n);
    let mut u_w = Vector::zeros(n);
    let mut z = Vector::zeros(m);
    let mut u_z = Vector::zeros(m);
    let mut ax = Vector::zeros(m);

    let mut buf_n = Vector::zeros(n);
    let mut buf_m = Vector::zeros(m);
    let mut w_prev = Vector::zeros(n);
    let mut z_prev = Vector::zeros(m);

    let sqrt_nm = ((n + m) as f64).sqrt();
    let sqrt_n = (n as f64).sqrt();
    let mut rho = cfg.rho;
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;
    let mut status = SolveStatus::MaxIters;
    let mut iterations = 0;
    let mut rho_updates = 0;

    for k in 1..=cfg.max_iters {
        iterations = k;

        // x-update
        buf_m.copy_from(&z);
        buf_m -= &u_z;
        x.copy_from(&w);
        x -= &u_w;
        x.gemv_tr(1.0, a, &buf_m, 1.0);
        chol.solve_mut(&mut x);
        ax.gemv(1.0, a, &x, 0.0);

        // w-update
        std::mem::swap(&mut w, &mut w_prev);
        buf_n.copy_from(&x);
        buf_n += &u_w;
        reg.prox_into(&buf_n, 1.0 / rho, &mut w);

        // z-update
        std::mem::swap(&mut z, &mut z_prev);
        z.copy_from(&ax);
        z += &u_z;
        project_l2_ball_in_place(&mut z, y, delta);

        // Dual ascent and residuals.
        let mut primal_sq = 0.0;
        for ((uw, &xi), &wi) in u_w.iter_mut().zip(x.iter()).zip(w.iter()) {
            let r = xi - wi;
            *uw += r;
            primal_sq += r * r;
        }
        for ((uz, &axi), &zi) in u_z.iter_mut().zip(ax.iter()).zip(z.iter()) {
            let r = axi - zi;
            *uz += r;
            primal_sq += r * r;
        }
        primal = primal_sq.sqrt();

        buf_m.copy_from(&z);
        buf_m -= &z_prev;
        buf_n.copy_from(&w);
        buf_n -= &w_prev;
        buf_n.gemv_tr(1.0, a, &buf_m, 1.0);
        dual = rho * buf_n.norm();

        let x_norm = x.norm();
        if !x_norm.is_finite() || x_norm > cfg.divergence_guard {
            status = SolveStatus::Diverged;
            break;
        }

        let lhs = (x_norm * x_norm + ax.norm_squared()).sqrt();
        let rhs = (w.norm_squared() + z.norm_squared()).sqrt();
        let eps_pri = sqrt_nm * cfg.tol_abs + cfg.tol_rel * lhs.max(rhs);
        if primal <= eps_pri {
            buf_n.gemv_tr(1.0, a, &u_z, 0.0);
            let dual_scale = (u_w.norm_squared() + buf_n.norm_squared()).sqrt();
            let eps_dual = sqrt_n * cfg.tol_abs + cfg.tol_rel * rho * dual_scale;
            if dual <= eps_dual {
                status = SolveStatus::Converged;
                break;
            }
        }

        if cfg.adaptive_rho && k % RHO_INTERVAL == 0 && rho_updates < MAX_RHO_UPDATES {
            if primal > 10.0 * dual {
                rho *= 2.0;
                u_w /= 2.0;
                u_z /= 2.0;
                rho_updates += 1;
            } else if dual > 10.0 * primal {
                rho /= 2.0;
                u_w *= 2.0;
                u_z *= 2.0;
                rho_updates += 1;
            }
        }
    }

    Ok(SolveReport {
        objective_value: reg.objective(&w),
        solution: w,
        primal_residual: primal,
        dual_residual: dual,
        iterations,
        status,
        rho,
        relative_error: None,
    })
}
