//! Sparse recovery with prior information by maximizing correlation.
//!
//! The crate solves
//!
//! ```text
//! minimize  ||x||_1 - <p, x>   subject to  ||y - A x||_2 <= delta
//! ```
//!
//! where `p = lambda * phi` is the shift contributed by a prior signal
//! `phi`, together with the plain Lasso objective and the l1-l1 / l1-l2
//! penalized baselines. It also provides the descent-cone geometry that
//! predicts how many measurements the program needs (the `v` parameter,
//! Gaussian-width bounds, Monte-Carlo statistical dimension) and a
//! reproducible phase-transition harness.
//!
//! Module map:
//!
//! * [`model`]: signals, shifts, sensing problems and deterministic seeding.
//! * [`prox`]: proximal operators and the ball projection.
//! * [`solvers`]: the splitting solver and an independent subgradient oracle.
//! * [`geometry`]: cone quantities and Monte-Carlo estimators.
//! * [`experiments`]: phase grids, contours and method comparison.
//! * [`io`]: headerless CSV for vectors and matrices.

pub mod error;
pub mod experiments;
pub mod geometry;
pub mod io;
pub mod model;
pub mod prox;
pub mod solvers;

pub use error::{Error, Result};
pub use experiments::{
    compare_methods, compare_methods_with_threads, extract_contour, run_phase_grid,
    run_phase_grid_with_threads, run_trial, Comparison, ContourPoint, GridCounts, Method,
    PhaseGrid, PhaseProtocol, TrialOutcome,
};
pub use geometry::{ConeDescriptor, WidthEstimate};
pub use model::{
    derive_substream, generate_bernoulli_matrix, generate_sparse_signal, make_prior_case,
    Amplitude, PriorCase, PriorShift, SensingProblem, SparseSignal, Substream, TrialSeed,
};
pub use prox::Regularizer;
pub use solvers::{solve, solve_subgradient_oracle, SolveReport, SolveStatus, SolverConfig};

/// Dense real vector used throughout the crate.
pub type Vector = nalgebra::DVector<f64>;
/// Dense real matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;
