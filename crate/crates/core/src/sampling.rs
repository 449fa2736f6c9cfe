//! Deterministic point sets for audits and randomized checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::system::{BoxSet, Interval};

const PRIMES: [u32; 24] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
];

/// Radical inverse of `index` in `base`.
fn radical_inverse(mut index: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % b) as f64;
        index /= b;
        f *= inv;
    }
    r
}

/// Halton points in a box. Index 0 (the lower corner) is skipped.
pub fn halton(bounds: &[Interval], count: usize) -> Vec<Vec<f64>> {
    assert!(
        bounds.len() <= PRIMES.len(),
        "halton supports up to {} dimensions",
        PRIMES.len()
    );
    (1..=count as u64)
        .map(|k| {
            bounds
                .iter()
                .zip(PRIMES)
                .map(|(iv, p)| iv.lo + (iv.hi - iv.lo) * radical_inverse(k, p))
                .collect()
        })
        .collect()
}

/// Seeded uniform points in a box.
pub fn uniform(bounds: &[Interval], count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            bounds
                .iter()
                .map(|iv| iv.lo + (iv.hi - iv.lo) * rng.gen::<f64>())
                .collect()
        })
        .collect()
}

/// Splits points of `bounds_x ⨯ u_box` into `(x, u)` pairs.
pub fn state_control_points(
    center: &[f64],
    radius: f64,
    u_box: &BoxSet,
    count: usize,
    seed: Option<u64>,
) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut bounds: Vec<Interval> = center.iter().map(|c| Interval::new(c - radius, c + radius)).collect();
    bounds.extend(u_box.intervals().iter().copied());
    let n = center.len();
    let pts = match seed {
        Some(s) => uniform(&bounds, count, s),
        None => halton(&bounds, count),
    };
    pts.into_iter()
        .map(|mut p| {
            let u = p.split_off(n);
            (p, u)
        })
        .collect()
}
