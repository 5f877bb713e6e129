use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dcqe_bench::{random_matrix, scores_and_labels};
use dcqe_core::causal::match_pairs;
use dcqe_core::numerics::{logistic_fit, pseudoinverse, svd_truncated};
use std::hint::black_box;

fn svd(c: &mut Criterion) {
    let mut g = c.benchmark_group("svd_truncated");
    for (rows, cols, k) in [(1000, 8, 6), (1000, 24, 8), (200, 50, 10)] {
        let a = random_matrix(rows, cols, 1);
        g.bench_with_input(BenchmarkId::from_parameter(format!("{rows}x{cols}_k{k}")), &a, |b, a| {
            b.iter(|| svd_truncated(black_box(a), k).unwrap())
        });
    }
    g.finish();
}

fn pinv(c: &mut Criterion) {
    let mut g = c.benchmark_group("pseudoinverse");
    for (rows, cols) in [(1000, 3), (1000, 6), (100, 100)] {
        let a = random_matrix(rows, cols, 2);
        g.bench_with_input(BenchmarkId::from_parameter(format!("{rows}x{cols}")), &a, |b, a| {
            b.iter(|| pseudoinverse(black_box(a)))
        });
    }
    g.finish();
}

fn logistic(c: &mut Criterion) {
    let mut g = c.benchmark_group("logistic_fit");
    for n in [1000, 10_000] {
        let x = random_matrix(n, 6, 3);
        let (_, z) = scores_and_labels(n, 4);
        g.bench_with_input(BenchmarkId::from_parameter(n), &(x, z), |b, (x, z)| {
            b.iter(|| logistic_fit(black_box(x), black_box(z)).unwrap())
        });
    }
    g.finish();
}

fn matching(c: &mut Criterion) {
    let mut g = c.benchmark_group("match_pairs");
    for n in [1000, 10_000, 100_000] {
        let (e, z) = scores_and_labels(n, 5);
        g.bench_with_input(BenchmarkId::from_parameter(n), &(e, z), |b, (e, z)| {
            b.iter(|| match_pairs(black_box(e), black_box(z)).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, svd, pinv, logistic, matching);
criterion_main!(benches);
