//! Sampling distributions of test statistics under a generator.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::Generator;
use crate::diagnostics::{beta_hat, gn_test};
use crate::error::{Error, Result};
use crate::par::{map_indexed, Exec};
use crate::rng::child_rng;
use crate::stats::{mean, pearson, quantile_sorted, sorted_copy, variance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    /// Sample correlation P_n.
    Pn,
    /// Studentized G_n.
    GnZ,
    /// Smallest coordinate of β̂.
    M,
}

impl std::str::FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pn" => Ok(Self::Pn),
            "gn_z" | "gnz" | "gn" => Ok(Self::GnZ),
            "m" => Ok(Self::M),
            other => Err(Error::InvalidParameter(format!("unknown statistic {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub statistic: Statistic,
    pub n: usize,
    pub reps: usize,
    /// Replications where the statistic was undefined.
    pub failed: usize,
    pub values: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
    /// (probability, quantile) pairs.
    pub quantiles: Vec<(f64, f64)>,
    pub histogram: Vec<HistogramBin>,
    /// Share of values outside [0, 0.2]; reported for P_n.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub outside_0_02: Option<f64>,
}

const PROBS: [f64; 7] = [0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99];
const BINS: usize = 20;

impl DistributionSummary {
    /// CSV with header `lower,upper,count`.
    pub fn write_histogram_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "lower,upper,count")?;
        for b in &self.histogram {
            writeln!(out, "{},{},{}", b.lower, b.upper, b.count)?;
        }
        Ok(())
    }
}

fn histogram(sorted: &[f64]) -> Vec<HistogramBin> {
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    if lo == hi {
        return vec![HistogramBin { lower: lo, upper: hi, count: sorted.len() }];
    }
    let width = (hi - lo) / BINS as f64;
    let mut bins: Vec<HistogramBin> = (0..BINS)
        .map(|b| HistogramBin { lower: lo + b as f64 * width, upper: lo + (b + 1) as f64 * width, count: 0 })
        .collect();
    for &v in sorted {
        let b = (((v - lo) / width) as usize).min(BINS - 1);
        bins[b].count += 1;
    }
    bins
}

/// Simulates `reps` data sets of size `n` and summarizes the statistic.
pub fn sampling_distribution(
    statistic: Statistic,
    generator: &Generator,
    n: usize,
    reps: usize,
    seed: u64,
    exec: Exec,
) -> Result<DistributionSummary> {
    generator.validate()?;
    if reps == 0 {
        return Err(Error::InvalidParameter("need reps >= 1".into()));
    }
    let raw = map_indexed(exec, reps, |r| -> Result<Option<f64>> {
        let mut rng = child_rng(seed, r as u64);
        let data = generator.draw_with(n, &mut rng)?;
        Ok(match statistic {
            Statistic::Pn => Some(pearson(data.xs(), data.ys())).filter(|v| v.is_finite()),
            Statistic::GnZ => gn_test(&data).ok().map(|g| g.z),
            Statistic::M => beta_hat(&data).ok().map(|b| b.iter().copied().fold(f64::INFINITY, f64::min)),
        })
    });
    let raw: Vec<Option<f64>> = raw.into_iter().collect::<Result<_>>()?;
    let values: Vec<f64> = raw.iter().flatten().copied().collect();
    let failed = reps - values.len();
    if values.is_empty() {
        return Err(Error::InvalidSample("the statistic was undefined in every replication".into()));
    }
    let sorted = sorted_copy(&values);
    let outside = (statistic == Statistic::Pn)
        .then(|| values.iter().filter(|v| !(0.0..=0.2).contains(*v)).count() as f64 / values.len() as f64);
    Ok(DistributionSummary {
        statistic,
        n,
        reps,
        failed,
        mean: mean(&values),
        sd: if values.len() > 1 { variance(&values).sqrt() } else { 0.0 },
        quantiles: PROBS.iter().map(|&p| (p, quantile_sorted(&sorted, p))).collect(),
        histogram: histogram(&sorted),
        outside_0_02: outside,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_replication_is_a_point() {
        let g = Generator::BivariateBeta { alpha: [1.0; 4] };
        let d = sampling_distribution(Statistic::Pn, &g, 30, 1, 3, Exec::default()).unwrap();
        assert_eq!(d.values.len(), 1);
        assert!(d.quantiles.iter().all(|(_, q)| *q == d.values[0]));
        assert_eq!(d.histogram.len(), 1);
        assert_eq!(d.sd, 0.0);
    }

    #[test]
    fn histogram_counts_everything() {
        let g = Generator::BivariateBeta { alpha: [2.0, 3.0, 7.0, 1.0] };
        let d = sampling_distribution(Statistic::GnZ, &g, 50, 300, 1, Exec::default()).unwrap();
        assert_eq!(d.histogram.iter().map(|b| b.count).sum::<usize>() + d.failed, 300);
        assert!(d.outside_0_02.is_none());
    }
}
