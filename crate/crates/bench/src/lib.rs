//! Seeded inputs shared by the benchmarks.

use cmin_core::{CompactSetSample, PhaseSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` uniform points of the unit sphere in `R^ambient`.
pub fn sphere_sample(ambient: usize, n: usize, seed: u64) -> CompactSetSample {
    let space = PhaseSpace::sphere(ambient - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let mut p: Vec<f64> = (0..ambient).map(|_| rng.gen_range(-1.0..1.0)).collect();
            space.project(&mut p);
            p
        })
        .collect();
    CompactSetSample::from_points(space, 0.0, &pts)
}

/// Circle of radius `r` about the origin of the plane, `n` points.
pub fn circle(r: f64, n: usize) -> CompactSetSample {
    let pts: Vec<[f64; 2]> = (0..n)
        .map(|k| {
            let a = std::f64::consts::TAU * k as f64 / n as f64;
            [r * a.cos(), r * a.sin()]
        })
        .collect();
    CompactSetSample::from_points(PhaseSpace::euclidean(2), 0.0, &pts)
}
