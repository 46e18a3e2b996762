//! Deterministic low-discrepancy point sets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRIMES: [u64; 24] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
];

/// Halton sequence with a seeded Cranley-Patterson rotation.
#[derive(Debug, Clone)]
pub struct Halton {
    index: u64,
    shift: Vec<f64>,
}

impl Halton {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim <= PRIMES.len(), "Halton sequence supports at most {} dimensions", PRIMES.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift = (0..dim).map(|_| rng.random::<f64>()).collect();
        Halton { index: 1, shift }
    }

    fn radical_inverse(mut i: u64, base: u64) -> f64 {
        let inv = 1.0 / base as f64;
        let mut f = inv;
        let mut r = 0.0;
        while i > 0 {
            r += f * (i % base) as f64;
            i /= base;
            f *= inv;
        }
        r
    }
}

impl Iterator for Halton {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        let i = self.index;
        self.index += 1;
        Some(
            self.shift
                .iter()
                .zip(PRIMES)
                .map(|(s, b)| (Self::radical_inverse(i, b) + s).fract())
                .collect(),
        )
    }
}

/// `count` points of the open ball of radius `radius` in `R^dim`.
pub fn ball_points(dim: usize, radius: f64, count: usize, seed: u64) -> Vec<Vec<f64>> {
    Halton::new(dim, seed)
        .map(|u| u.iter().map(|v| radius * (2.0 * v - 1.0)).collect::<Vec<f64>>())
        .filter(|x| x.iter().map(|v| v * v).sum::<f64>() < radius * radius)
        .take(count)
        .collect()
}

/// Points of a product chart: the first `flat_dim` coordinates fill a ball of
/// radius `flat_radius`, the remaining `fiber_dim` a ball of radius
/// `fiber_radius`.
pub fn product_points(
    flat_dim: usize,
    flat_radius: f64,
    fiber_dim: usize,
    fiber_radius: f64,
    count: usize,
    seed: u64,
) -> Vec<Vec<f64>> {
    let in_ball = |x: &[f64], r: f64| x.is_empty() || x.iter().map(|v| v * v).sum::<f64>() < r * r;
    Halton::new(flat_dim + fiber_dim, seed)
        .map(|u| {
            u.iter()
                .enumerate()
                .map(|(i, v)| {
                    let r = if i < flat_dim { flat_radius } else { fiber_radius };
                    r * (2.0 * v - 1.0)
                })
                .collect::<Vec<f64>>()
        })
        .filter(|x| in_ball(&x[..flat_dim], flat_radius) && in_ball(&x[flat_dim..], fiber_radius))
        .take(count)
        .collect()
}
