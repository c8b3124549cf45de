use nalgebra::SymmetricEigen;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{SensingProblem, Substream};
use crate::prox::Regularizer;
use crate::{Matrix, Vector};

/// Number of restarts; each restart shrinks the step scale.
const EPOCHS: usize = 8;
const EPOCH_SHRINK: f64 = 0.25;
const POWER_ITERATIONS: usize = 20;
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub solution: Vector,
    pub objective_value: f64,
    /// `A A^T` was singular and was regularized by `1e-10 I`.
    pub regularized: bool,
    /// Best feasible objective at the end of each epoch.
    pub best_history: Vec<f64>,
    pub iterations: usize,
    /// Operator-norm estimate of `A` from power iteration.
    pub operator_norm: f64,
}

/// Exact Euclidean projection onto `{x : ||A x - y||_2 <= delta}` using one
/// eigendecomposition of `A A^T`.
struct FeasibleSetProjector<'a> {
    a: &'a Matrix,
    y: &'a Vector,
    delta: f64,
    basis: Matrix,
    eigenvalues: Vector,
    regularized: bool,
}

impl<'a> FeasibleSetProjector<'a> {
    fn new(problem: &'a SensingProblem) -> Self {
        let a = problem.matrix();
        let gram = a * a.transpose();
        let eig = SymmetricEigen::new(gram);
        let scale = eig.eigenvalues.amax().max(1.0);
        let regularized = eig.eigenvalues.iter().any(|&l| l <= RANK_TOL * scale);
        let eigenvalues = if regularized {
            eig.eigenvalues.map(|l| l.max(0.0) + RANK_TOL)
        } else {
            eig.eigenvalues
        };
        FeasibleSetProjector {
            a,
            y: problem.observation(),
            delta: problem.noise_bound(),
            basis: eig.eigenvectors,
            eigenvalues,
            regularized,
        }
    }

    fn project(&self, v: &Vector) -> Vector {
        if self.a.nrows() == 0 {
            return v.clone();
        }
        let r0 = self.a * v - self.y;
        if r0.norm() <= self.delta {
            return v.clone();
        }
        let c = self.basis.tr_mul(&r0);
        // Coordinates of the multiplier-weighted residual in the eigenbasis.
        let weights: Vector = if self.delta == 0.0 {
            c.component_div(&self.eigenvalues)
        } else {
            let mu = self.multiplier(&c);
            // mu * (I + mu G)^{-1} r0
            Vector::from_fn(c.len(), |i, _| mu * c[i] / (1.0 + mu * self.eigenvalues[i]))
        };
        v - self.a.tr_mul(&(&self.basis * weights))
    }

    /// Root of `||(I + mu G)^{-1} r0||_2 = delta` in `mu >= 0`.
    fn multiplier(&self, c: &Vector) -> f64 {
        let residual = |mu: f64| {
            c.iter()
                .zip(self.eigenvalues.iter())
                .map(|(ci, li)| {
                    let t = ci / (1.0 + mu * li);
                    t * t
                })
                .sum::<f64>()
                .sqrt()
        };
        let mut hi = 1.0;
        let mut guard = 0;
        while residual(hi) > self.delta && guard < 200 {
            hi *= 2.0;
            guard += 1;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if residual(mid) > self.delta {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        hi
    }
}

fn operator_norm(a: &Matrix, rng: &mut Substream) -> f64 {
    let n = a.ncols();
    if a.nrows() == 0 || n == 0 {
        return 0.0;
    }
    let mut v = Vector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut estimate = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let norm = v.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v /= norm;
        let av = a * &v;
        estimate = av.norm();
        v = a.tr_mul(&av);
    }
    estimate
}

/// Projected subgradient reference solver.
///
/// Steps `x <- Proj_C(x - (c / sqrt(k)) g)` with `g` a subgradient of the
/// objective, `c = 1 / ||A||` (power iteration) and `Proj_C` the exact
/// projection onto the feasible set. The `iters` budget is split into
/// restarts from the best point found so far, each with a smaller `c`,
/// which tightens the final accuracy on sharp (polyhedral) objectives.
///
/// Shares no code with the splitting solver.
pub fn solve_subgradient_oracle(
    problem: &SensingProblem,
    reg: &Regularizer,
    iters: usize,
    rng: &mut Substream,
) -> Result<OracleSolution> {
    let n = problem.cols();
    reg.check_dim(n)?;
    if iters == 0 {
        return Err(Error::invalid("oracle needs at least one iteration"));
    }
    let projector = FeasibleSetProjector::new(problem);
    let op_norm = operator_norm(problem.matrix(), rng);
    let base_step = if op_norm > 0.0 { 1.0 / op_norm } else { 1.0 };

    let mut best = projector.project(&Vector::zeros(n));
    let mut best_val = reg.objective(&best);
    let mut history = Vec::with_capacity(EPOCHS);
    let per_epoch = (iters / EPOCHS).max(1);
    let mut done = 0;
    let mut scale = base_step;

    while done < iters {
        let mut x = best.clone();
        let len = per_epoch.min(iters - done);
        for k in 1..=len {
            let g = reg.subgradient(&x);
            if g.norm_squared() == 0.0 {
                break;
            }
            let step = scale / (k as f64).sqrt();
            x = projector.project(&(x - g * step));
            let val = reg.objective(&x);
            if val < best_val {
                best_val = val;
                best.copy_from(&x);
            }
        }
        done += len;
        history.push(best_val);
        scale *= EPOCH_SHRINK;
    }

    Ok(OracleSolution {
        solution: best,
        objective_value: best_val,
        regularized: projector.regularized,
        best_history: history,
        iterations: done,
        operator_norm: op_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        generate_bernoulli_matrix, generate_sparse_signal, make_prior_case, substream_from_seed,
        Amplitude, PriorCase,
    };
    use crate::solvers::{check_feasibility, solve, SolverConfig};

    #[test]
    fn zero_observation_gives_zero() {
        let mut rng = substream_from_seed(1);
        let a = generate_bernoulli_matrix(5, 9, &mut rng).unwrap();
        let problem = SensingProblem::noiseless(a, &Vector::zeros(9)).unwrap();
        let out = solve_subgradient_oracle(&problem, &Regularizer::Lasso, 1000, &mut rng).unwrap();
        assert!(out.solution.norm() < 1e-12);
    }

    #[test]
    fn identity_instance_is_exact() {
        let mut rng = substream_from_seed(2);
        let x = generate_sparse_signal(16, 4, Amplitude::StandardNormal, &mut rng).unwrap();
        let problem = SensingProblem::noiseless(Matrix::identity(16, 16), x.values()).unwrap();
        let out = solve_subgradient_oracle(&problem, &Regularizer::Lasso, 500, &mut rng).unwrap();
        assert!((out.solution - x.values()).norm() < 1e-3);
    }

    #[test]
    fn agrees_with_splitting_solver() {
        let mut rng = substream_from_seed(5);
        let x = generate_sparse_signal(12, 2, Amplitude::StandardNormal, &mut rng).unwrap();
        let a = generate_bernoulli_matrix(8, 12, &mut rng).unwrap();
        let p = make_prior_case(PriorCase::B, &x, &mut rng).unwrap();
        let problem = SensingProblem::noiseless(a, x.values()).unwrap();
        let reg = Regularizer::max_correlation(p);
        let admm = solve(&problem, &reg, &SolverConfig::default()).unwrap();
        let oracle = solve_subgradient_oracle(&problem, &reg, 200_000, &mut rng).unwrap();
        let gap = (&admm.solution - &oracle.solution).norm();
        assert!(gap < 1e-3, "gap {gap}");
    }

    #[test]
    fn best_objective_never_increases() {
        let mut rng = substream_from_seed(6);
        let x = generate_sparse_signal(20, 4, Amplitude::StandardNormal, &mut rng).unwrap();
        let a = generate_bernoulli_matrix(12, 20, &mut rng).unwrap();
        let problem = SensingProblem::noiseless(a, x.values()).unwrap();
        let out =
            solve_subgradient_oracle(&problem, &Regularizer::Lasso, 16_000, &mut rng).unwrap();
        assert_eq!(out.best_history.len(), EPOCHS);
        assert!(out.best_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn projection_hits_the_ball_boundary() {
        let mut rng = substream_from_seed(7);
        let a = generate_bernoulli_matrix(6, 10, &mut rng).unwrap();
        let y = Vector::from_fn(6, |i, _| i as f64);
        let problem = SensingProblem::new(a, y, 0.5).unwrap();
        let projector = FeasibleSetProjector::new(&problem);
        let v = Vector::from_fn(10, |i, _| (i as f64).sin() * 4.0);
        let x = projector.project(&v);
        let gap = check_feasibility(&problem, &x).unwrap();
        assert!(gap.abs() < 1e-9, "gap {gap}");
        // Optimality: v - x is a nonnegative multiple of A^T (A x - y).
        let normal = problem
            .matrix()
            .tr_mul(&(problem.matrix() * &x - problem.observation()));
        let d = &v - &x;
        let cos = d.dot(&normal) / (d.norm() * normal.norm());
        assert!((cos - 1.0).abs() < 1e-9, "cos {cos}");
    }

    #[test]
    fn tall_matrix_flags_regularization() {
        let mut rng = substream_from_seed(8);
        let x = generate_sparse_signal(6, 2, Amplitude::StandardNormal, &mut rng).unwrap();
        let a = generate_bernoulli_matrix(9, 6, &mut rng).unwrap();
        let problem = SensingProblem::noiseless(a, x.values()).unwrap();
        let out = solve_subgradient_oracle(&problem, &Regularizer::Lasso, 2000, &mut rng).unwrap();
        assert!(out.regularized);
        assert!(check_feasibility(&problem, &out.solution).unwrap() < 1e-6);
    }
}
