//! Deterministic fixtures shared by the benchmarks.

use corrsense::model::substream_from_seed;
use corrsense::{
    generate_bernoulli_matrix, generate_sparse_signal, make_prior_case, Amplitude, ConeDescriptor,
    PriorCase, PriorShift, SensingProblem, SparseSignal, Vector,
};

pub struct Instance {
    pub signal: SparseSignal,
    pub shift: PriorShift,
    pub problem: SensingProblem,
}

/// Noiseless `m x n` Bernoulli instance with an `s`-sparse signal and the
/// prior shift of `case`.
pub fn instance(n: usize, m: usize, s: usize, case: PriorCase, seed: u64) -> Instance {
    let mut rng = substream_from_seed(seed);
    let signal = generate_sparse_signal(n, s, Amplitude::StandardNormal, &mut rng).unwrap();
    let a = generate_bernoulli_matrix(m, n, &mut rng).unwrap();
    let shift = make_prior_case(case, &signal, &mut rng).unwrap();
    let problem = SensingProblem::noiseless(a, signal.values()).unwrap();
    Instance {
        signal,
        shift,
        problem,
    }
}

pub fn cone(n: usize, s: usize, case: PriorCase, seed: u64) -> ConeDescriptor {
    let inst = instance(n, 1, s, case, seed);
    ConeDescriptor::new(inst.signal, inst.shift).unwrap()
}

/// Dense standard normal vector.
pub fn gaussian(n: usize, seed: u64) -> Vector {
    let mut rng = substream_from_seed(seed);
    generate_sparse_signal(n, n, Amplitude::StandardNormal, &mut rng)
        .unwrap()
        .values()
        .clone()
}
