use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ou_pairs_core::cycle_stats::cycle_stats_at;
use ou_pairs_core::optimizer::{
    efficient_frontier, maximize_unconstrained, solve_risk_constrained, DEFAULT_EPS, DEFAULT_TOL,
};
use ou_pairs_core::specfun::{digamma, log_gamma};
use ou_pairs_core::RiskBound;

fn special_functions(c: &mut Criterion) {
    c.bench_function("log_gamma(7.5)", |b| b.iter(|| log_gamma(black_box(7.5))));
    c.bench_function("digamma(0.7)", |b| b.iter(|| digamma(black_box(0.7))));
}

fn cycle_series(c: &mut Criterion) {
    let mut group = c.benchmark_group("cycle_stats");
    for a in [0.5, 2.0, 4.0] {
        group.bench_with_input(BenchmarkId::from_parameter(a), &a, |b, &a| {
            b.iter(|| cycle_stats_at(black_box(a), black_box(-a)))
        });
    }
    group.finish();
}

fn optimizers(c: &mut Criterion) {
    c.bench_function("maximize_unconstrained(c=1)", |b| {
        b.iter(|| maximize_unconstrained(black_box(1.0), DEFAULT_TOL))
    });
    let bound = RiskBound::new(0.05).unwrap();
    c.bench_function("solve_risk_constrained(c=1, v0=0.05)", |b| {
        b.iter(|| solve_risk_constrained(black_box(1.0), bound, DEFAULT_EPS))
    });
    c.bench_function("efficient_frontier(c=0.2, 100)", |b| {
        b.iter(|| efficient_frontier(black_box(0.2), 100))
    });
}

criterion_group!(benches, special_functions, cycle_series, optimizers);
criterion_main!(benches);
