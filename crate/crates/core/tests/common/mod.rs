#![allow(dead_code)]

use rand::Rng;
use tbp::env::{gaps, shape_check, Problem, ShapeClass};

/// Random concave sequence of length `k` from non-increasing increments, with
/// the threshold kept away from every mean.
pub fn random_concave<R: Rng>(k: usize, rng: &mut R, sigma: f64) -> Problem {
    loop {
        let mut slope: f64 = rng.random_range(-2.0..4.0);
        let mut m: f64 = rng.random_range(-3.0..3.0);
        let mut means = Vec::with_capacity(k);
        for _ in 0..k {
            means.push(m);
            m += slope;
            slope -= rng.random_range(0.0..2.0);
        }
        let tau = rng.random_range(-4.0..4.0);
        let p = Problem::new(means, sigma, tau).unwrap();
        if gaps(&p).delta_min > 1e-3 && shape_check(&p, ShapeClass::Concave) {
            return p;
        }
    }
}

/// Increasing means with `split` arms below `tau`, none on it.
pub fn sorted_monotone<R: Rng>(k: usize, split: usize, rng: &mut R, sigma: f64, tau: f64) -> Problem {
    let mut means: Vec<f64> = (0..k)
        .map(|j| {
            let mag = rng.random_range(0.01..3.0);
            if j < split {
                tau - mag
            } else {
                tau + mag
            }
        })
        .collect();
    means.sort_by(f64::total_cmp);
    Problem::new(means, sigma, tau).unwrap()
}
