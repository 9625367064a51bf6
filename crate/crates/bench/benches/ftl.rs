use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use valagg_bench::{counterexample_aggregate, decaying_iterates};
use valagg_core::diagnostics::{s_series, s_series_scalar};
use valagg_core::ftl::ftl_step_with;
use valagg_core::{
    make_counterexample, run_deterministic, CounterexampleSpec, Domain, LoopConfig, ParameterPoint,
    SolverOptions,
};

fn leader_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("leader_solve");
    let domain = Domain::unbounded(1);
    let warm = ParameterPoint::scalar(0.3);
    for n in [10, 1000] {
        let agg = counterexample_aggregate(0.7, n);
        for (name, force) in [("closed_form", false), ("iterative", true)] {
            let opts = SolverOptions {
                force_iterative: force,
                ..SolverOptions::default()
            };
            group.bench_with_input(BenchmarkId::new(name, n), &agg, |b, agg| {
                b.iter(|| ftl_step_with(black_box(agg), &domain, &warm, &opts).unwrap())
            });
        }
    }
    group.finish();
}

fn full_run(c: &mut Criterion) {
    let inst = make_counterexample(&CounterexampleSpec::new(0.5));
    let cfg = LoopConfig::deterministic(10_000, 1.0);
    let mut group = c.benchmark_group("run_deterministic");
    group.sample_size(10);
    group.bench_function("counterexample_1e4", |b| {
        b.iter(|| run_deterministic(black_box(&inst), &cfg).unwrap())
    });
    group.finish();
}

fn concentration(c: &mut Criterion) {
    let mut group = c.benchmark_group("s_series");
    for n in [1000, 10_000] {
        let iterates = decaying_iterates(n);
        let scalars: Vec<f64> = iterates.iter().map(|p| p.coords()[0]).collect();
        group.bench_with_input(BenchmarkId::new("pairwise", n), &iterates, |b, it| {
            b.iter(|| s_series(black_box(it)))
        });
        group.bench_with_input(BenchmarkId::new("sorted_scalar", n), &scalars, |b, v| {
            b.iter(|| s_series_scalar(black_box(v)))
        });
    }
    group.finish();
}

criterion_group!(benches, leader_solve, full_run, concentration);
criterion_main!(benches);
