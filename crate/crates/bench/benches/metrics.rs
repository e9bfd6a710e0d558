use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use scorecard_core::metrics::{auc, ks_statistic};

fn scores(n: usize) -> (Vec<f64>, Vec<u8>) {
    // deterministic, tie-heavy scores with a mild signal
    let s: Vec<f64> = (0..n).map(|i| ((i * 7919) % 1000) as f64 / 1000.0).collect();
    let y = s.iter().enumerate().map(|(i, v)| u8::from(*v + ((i * 31) % 17) as f64 / 17.0 > 1.0)).collect();
    (s, y)
}

fn metrics(c: &mut Criterion) {
    let mut group = c.benchmark_group("metrics");
    for n in [10_000, 100_000] {
        let (s, y) = scores(n);
        group.bench_with_input(BenchmarkId::new("auc", n), &n, |b, _| b.iter(|| auc(black_box(&s), &y).unwrap()));
        group.bench_with_input(BenchmarkId::new("ks", n), &n, |b, _| {
            b.iter(|| ks_statistic(black_box(&s), &y).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, metrics);
criterion_main!(benches);
