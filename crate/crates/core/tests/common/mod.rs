#![allow(dead_code)]

use deepwave::{Grid, Profile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random trigonometric polynomial with modes `1..=modes` and an optional mean.
pub fn band_limited(g: Grid, modes: usize, mean: f64, rng: &mut ChaCha8Rng) -> Profile {
    let coeffs: Vec<(f64, f64)> =
        (0..modes).map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let base = 2.0 * std::f64::consts::PI / g.length();
    Profile::from_fn(g, |x| {
        mean + coeffs
            .iter()
            .enumerate()
            .map(|(m, (a, b))| {
                let k = (m + 1) as f64 * base;
                a * (k * x).cos() + b * (k * x).sin()
            })
            .sum::<f64>()
    })
    .unwrap()
}

/// Smooth, rapidly decaying random bump on a line grid.
pub fn decaying(g: Grid, rng: &mut ChaCha8Rng) -> Profile {
    let terms: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-3.0..3.0), rng.random_range(0.6..2.0)))
        .collect();
    Profile::from_fn(g, |x| terms.iter().map(|(a, c, s)| a * (-((x - c) / s).powi(2)).exp()).sum()).unwrap()
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
