use std::hint::black_box;

use criterion::{criterion_group, Criterion};
use reschain::traj::{recover_absolute, residual_chain_targets, to_deltas};

fn bench(c: &mut Criterion) {
    let s = super::sample(1, 4, 30);
    let pred = to_deltas(&super::sample(2, 4, 30));
    c.bench_function("residual_chain_targets/m=30", |b| {
        b.iter(|| residual_chain_targets(black_box(&s), black_box(&pred)).unwrap())
    });
    c.bench_function("recover_absolute/m=30", |b| {
        b.iter(|| recover_absolute(black_box(s.current()), black_box(&pred)))
    });
}

criterion_group!(benches, bench);
