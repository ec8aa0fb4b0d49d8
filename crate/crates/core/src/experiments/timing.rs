//! Wall-clock cost of the moment estimators.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bivariate::{sample, AlphaParams};
use crate::error::Result;
use crate::estimators::{empirical_moments, estimate, Method};
use crate::rng::child_seed;
use crate::stats::median;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub method: Method,
    pub median_seconds: f64,
    pub mean_seconds: f64,
    pub fits: usize,
}

/// Times each moment method on the moments of `reps` samples, interleaving
/// methods per sample so they see the same machine state. Data generation
/// and moment computation are excluded.
pub fn time_estimators(alpha: &AlphaParams, n: usize, reps: usize, methods: &[Method], seed: u64) -> Result<Vec<TimingRow>> {
    let mut times: Vec<Vec<f64>> = vec![Vec::with_capacity(reps); methods.len()];
    for r in 0..reps {
        let data = sample(alpha, n, child_seed(seed, r as u64));
        let Ok(m) = empirical_moments(&data) else { continue };
        for (j, &method) in methods.iter().enumerate() {
            let start = Instant::now();
            let out = estimate(method, &m);
            let elapsed = start.elapsed().as_secs_f64();
            std::hint::black_box(&out);
            times[j].push(elapsed);
        }
    }
    Ok(methods
        .iter()
        .zip(times)
        .map(|(&method, t)| TimingRow {
            method,
            median_seconds: median(&t),
            mean_seconds: t.iter().sum::<f64>() / t.len() as f64,
            fits: t.len(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_per_method() {
        let a = AlphaParams::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let rows = time_estimators(&a, 50, 5, &Method::MOMENT_METHODS, 1).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.fits == 5 && r.median_seconds >= 0.0));
    }
}
