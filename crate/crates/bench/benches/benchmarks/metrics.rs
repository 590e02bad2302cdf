use std::hint::black_box;

use criterion::{criterion_group, BenchmarkId, Criterion};
use reschain::metrics::{chamfer, dtw, frechet_discrete, hausdorff, PointSeq};

fn bench(c: &mut Criterion) {
    let mut group = c.benchmark_group("metrics");
    for len in [6usize, 32, 128] {
        let a = PointSeq::new(super::random_walk(3, len)).unwrap();
        let b = PointSeq::new(super::random_walk(4, len)).unwrap();
        group.bench_with_input(BenchmarkId::new("dtw", len), &len, |bench, _| {
            bench.iter(|| dtw(black_box(&a), black_box(&b)))
        });
        group.bench_with_input(BenchmarkId::new("frechet", len), &len, |bench, _| {
            bench.iter(|| frechet_discrete(black_box(&a), black_box(&b)))
        });
        group.bench_with_input(BenchmarkId::new("hausdorff", len), &len, |bench, _| {
            bench.iter(|| hausdorff(black_box(&a), black_box(&b)))
        });
        group.bench_with_input(BenchmarkId::new("chamfer", len), &len, |bench, _| {
            bench.iter(|| chamfer(black_box(&a), black_box(&b)))
        });
    }
    group.finish();
}

criterion_group!(benches, bench);
