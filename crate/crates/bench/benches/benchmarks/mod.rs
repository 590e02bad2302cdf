pub mod metrics;
pub mod mlp;
pub mod targets;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reschain::{PathPoint, TrainingSample, Vec2};

pub fn random_walk(seed: u64, len: usize) -> Vec<Vec2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = Vec2::ZERO;
    (0..len)
        .map(|_| {
            p += Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            p
        })
        .collect()
}

pub fn sample(seed: u64, n: usize, m: usize) -> TrainingSample {
    let mut pts: Vec<PathPoint> = random_walk(seed, n + m + 1)
        .into_iter()
        .enumerate()
        .map(|(t, p)| PathPoint::new(t as i64, p.x, p.y))
        .collect();
    let future = pts.split_off(n + 1);
    TrainingSample::new(pts, future).unwrap()
}
