//! Deterministic point and covector samples.
//!
//! Points are the box center, then two points on each coordinate axis
//! through the center, then a Halton sequence with a Cranley-Patterson
//! shift drawn from the scenario seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Scenario;

const PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as f64;
    let mut inv = 1.0 / b;
    let mut acc = 0.0;
    while i > 0 {
        acc += (i % base as u64) as f64 * inv;
        i /= base as u64;
        inv /= b;
    }
    acc
}

pub fn sample_points(s: &Scenario, count: usize) -> Vec<Vec<f64>> {
    let n = s.n();
    let center = s.center();
    let mut out = vec![center.clone()];
    for i in 0..n {
        let half = 0.5 * (s.bounds[i].1 - s.bounds[i].0);
        for t in [-0.5, 0.5] {
            let mut p = center.clone();
            p[i] += t * half;
            out.push(p);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed ^ 0x9e37_79b9_7f4a_7c15);
    let shift: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let mut k = 1u64;
    while out.len() < count {
        let p = (0..n)
            .map(|i| {
                let u = (radical_inverse(k, PRIMES[i % PRIMES.len()]) + shift[i]).fract();
                let (lo, hi) = s.bounds[i];
                // keep a margin from the boundary
                lo + (hi - lo) * (0.05 + 0.9 * u)
            })
            .collect();
        out.push(p);
        k += 1;
    }
    out.truncate(count);
    out
}

/// Unit covectors on `n` real slots.
pub fn sample_covectors(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5851_f42d_4c95_7f2d);
    (0..count)
        .map(|_| loop {
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.1 {
                break v.into_iter().map(|x| x / norm).collect();
            }
        })
        .collect()
}
