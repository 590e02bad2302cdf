use std::hint::black_box;

use criterion::{criterion_group, Criterion};
use reschain::mlp::{backward, featurize, forward, init_params, Activation};

fn bench(c: &mut Criterion) {
    // Default planner shape: 2(n+1) -> 64 -> 64 -> 2m with n = 4, m = 6.
    let params = init_params(&[10, 64, 64, 12], Activation::Tanh, 0).unwrap();
    let x = featurize(&super::sample(5, 4, 6));
    let g = vec![0.1; 12];
    c.bench_function("mlp/forward", |b| {
        b.iter(|| forward(black_box(&params), black_box(&x)).unwrap())
    });
    c.bench_function("mlp/backward", |b| {
        b.iter(|| backward(black_box(&params), black_box(&x), black_box(&g)).unwrap())
    });
}

criterion_group!(benches, bench);
