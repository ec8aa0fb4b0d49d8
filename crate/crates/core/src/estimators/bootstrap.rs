//! Nonparametric pairs bootstrap with percentile intervals.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{estimate_sample, Method};
use crate::bivariate::PairedSample;
use crate::error::{Error, Result};
use crate::par::{map_indexed, Exec};
use crate::rng::child_rng;
use crate::stats::{quantile_sorted, sorted_copy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapOptions {
    pub resamples: usize,
    pub level: f64,
    pub seed: u64,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        Self {
            resamples: 500,
            level: 0.95,
            seed: crate::rng::DEFAULT_SEED,
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCI {
    pub method: Method,
    pub level: f64,
    /// Resamples requested.
    pub resamples: usize,
    /// Resamples whose estimator failed and were excluded.
    pub failed: usize,
    pub lower: [f64; 4],
    pub upper: [f64; 4],
    /// One row per successful resample.
    pub resample_estimates: Vec<[f64; 4]>,
}

impl BootstrapCI {
    pub fn contains(&self, alpha: &[f64; 4]) -> [bool; 4] {
        std::array::from_fn(|i| self.lower[i] <= alpha[i] && alpha[i] <= self.upper[i])
    }

    /// CSV with header `alpha1,alpha2,alpha3,alpha4`.
    pub fn write_resamples_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "alpha1,alpha2,alpha3,alpha4")?;
        for row in &self.resample_estimates {
            let cells: Vec<String> = row.iter().map(|v| crate::bivariate::sample::format_g17(*v)).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// Re-estimates `method` on `options.resamples` resamples of the pairs and
/// returns per-coordinate percentile intervals. Resample `b` draws its indices
/// from the child stream `(seed, b)`.
pub fn bootstrap_ci(sample: &PairedSample, method: Method, options: &BootstrapOptions) -> Result<BootstrapCI> {
    if method.is_bayes() {
        return Err(Error::InvalidParameter(format!("bootstrap is defined for MM1-MM4, not {method}")));
    }
    let n = sample.len();
    if n < 2 {
        return Err(Error::InvalidSample(format!("need at least 2 pairs, got {n}")));
    }
    if options.resamples < 2 || !(options.level > 0.0 && options.level < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need resamples >= 2 and level in (0,1), got {} and {}",
            options.resamples, options.level
        )));
    }
    let results = map_indexed(options.exec, options.resamples, |b| {
        let mut rng = child_rng(options.seed, b as u64);
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        estimate_sample(method, &sample.select(&idx)).map(|r| r.alpha_hat)
    });
    let mut estimates = Vec::with_capacity(results.len());
    let mut first_error = None;
    for r in results {
        match r {
            Ok(a) => estimates.push(a),
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    if estimates.is_empty() {
        return Err(first_error.expect("every resample failed"));
    }
    let tail = (1.0 - options.level) / 2.0;
    let mut lower = [0.0; 4];
    let mut upper = [0.0; 4];
    for i in 0..4 {
        let column = sorted_copy(&estimates.iter().map(|a| a[i]).collect::<Vec<_>>());
        lower[i] = quantile_sorted(&column, tail);
        upper[i] = quantile_sorted(&column, 1.0 - tail);
    }
    Ok(BootstrapCI {
        method,
        level: options.level,
        resamples: options.resamples,
        failed: options.resamples - estimates.len(),
        lower,
        upper,
        resample_estimates: estimates,
    })
}
