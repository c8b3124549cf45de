use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use corrsense::geometry::dist_sq_to_normal_cone;
use corrsense::{solve, PriorCase, PriorShift, Regularizer, SolverConfig, Vector};
use corrsense_bench::{cone, gaussian, instance};

fn bench_prox(c: &mut Criterion) {
    let mut group = c.benchmark_group("prox");
    let n = 1024;
    let q = gaussian(n, 1);
    let phi = gaussian(n, 2);
    let regs = [
        Regularizer::Lasso,
        Regularizer::max_correlation(PriorShift::new(phi.map(|v| 0.5 * v.signum()))),
        Regularizer::l1_l1(phi.clone(), 1.0).unwrap(),
        Regularizer::l1_l2(phi.clone(), 1.0).unwrap(),
    ];
    for reg in &regs {
        group.bench_with_input(BenchmarkId::new(reg.name(), n), &q, |b, q| {
            b.iter(|| reg.prox(black_box(q), 0.7).unwrap())
        });
    }
    group.finish();
}

fn bench_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    group.sample_size(20);
    for (s, m) in [(4, 32), (8, 32), (8, 48)] {
        let inst = instance(64, m, s, PriorCase::B, 7);
        let reg = Regularizer::max_correlation(inst.shift.clone());
        let cfg = SolverConfig::default();
        group.bench_function(format!("n64_s{s}_m{m}"), |b| {
            b.iter(|| solve(black_box(&inst.problem), &reg, &cfg).unwrap())
        });
    }
    group.finish();
}

fn bench_normal_cone(c: &mut Criterion) {
    let mut group = c.benchmark_group("dist_to_normal_cone");
    for n in [32, 128, 512] {
        let k = cone(n, n / 8, PriorCase::B, 3);
        let g: Vector = gaussian(n, 4);
        group.bench_with_input(BenchmarkId::from_parameter(n), &g, |b, g| {
            b.iter(|| dist_sq_to_normal_cone(black_box(g), &k).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_prox, bench_solve, bench_normal_cone);
criterion_main!(benches);
