//! Simulation-based calibration of the posterior fit.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::fit::{hmc_fit, HmcConfig};
use super::prior::PriorSpec;
use crate::bivariate::sampling::sample_with;
use crate::bivariate::AlphaParams;
use crate::error::{Error, Result};
use crate::par::{map_indexed, Exec};
use crate::rng::{child_rng, child_seed};
use crate::stats::chi_square_uniform_p_value;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SbcConfig {
    pub prior: PriorSpec,
    /// Pairs per simulated data set.
    pub n: usize,
    /// Posterior draws per rank; ranks live on 0..=bins.
    pub bins: usize,
    pub experiments: usize,
    #[serde(default)]
    pub hmc: HmcConfig,
    #[serde(default = "crate::rng::default_seed")]
    pub seed: u64,
    #[serde(skip)]
    pub exec: Exec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbcReport {
    /// One row per completed experiment.
    pub ranks: Vec<[usize; 4]>,
    pub truths: Vec<[f64; 4]>,
    pub divergences: Vec<usize>,
    pub bins: usize,
    pub experiments: usize,
    /// Experiments dropped because a chain failed.
    pub failed: usize,
    /// χ² uniformity p-value over the bins + 1 rank values, per coordinate.
    pub p_values: [f64; 4],
}

/// Number of draws strictly below `truth`.
pub fn rank_statistic(truth: f64, draws: &[f64]) -> usize {
    draws.iter().filter(|&&d| d < truth).count()
}

/// Every ⌊M/L⌋-th draw, exactly `l` of them.
pub fn thin<T: Copy>(draws: &[T], l: usize) -> Result<Vec<T>> {
    if l == 0 || draws.len() < l {
        return Err(Error::InvalidParameter(format!("cannot take {l} draws from {}", draws.len())));
    }
    let stride = draws.len() / l;
    Ok((0..l).map(|j| draws[j * stride]).collect())
}

impl SbcReport {
    /// Counts per rank value and coordinate.
    pub fn histogram(&self) -> Vec<[usize; 4]> {
        let mut h = vec![[0usize; 4]; self.bins + 1];
        for r in &self.ranks {
            for k in 0..4 {
                h[r[k]][k] += 1;
            }
        }
        h
    }

    /// CSV with header `rank,alpha1,alpha2,alpha3,alpha4`, one row per rank value.
    pub fn write_histogram_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "rank,alpha1,alpha2,alpha3,alpha4")?;
        for (r, c) in self.histogram().iter().enumerate() {
            writeln!(out, "{r},{},{},{},{}", c[0], c[1], c[2], c[3])?;
        }
        Ok(())
    }

    /// CSV with header `experiment,alpha1,alpha2,alpha3,alpha4`, one row of ranks per experiment.
    pub fn write_ranks_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "experiment,alpha1,alpha2,alpha3,alpha4")?;
        for (e, r) in self.ranks.iter().enumerate() {
            writeln!(out, "{e},{},{},{},{}", r[0], r[1], r[2], r[3])?;
        }
        Ok(())
    }
}

/// Runs `experiments` prior → data → posterior round trips. Experiment e
/// draws from stream `(seed, e)`; its chains are seeded from the child seed
/// of `(seed, e)` and run sequentially, since the experiments themselves are
/// spread over `exec`.
pub fn sbc(config: &SbcConfig) -> Result<SbcReport> {
    if config.bins == 0 || config.experiments == 0 {
        return Err(Error::InvalidParameter("need L >= 1 and N >= 1".into()));
    }
    let total = config.hmc.chains * config.hmc.iters;
    if total < config.bins {
        return Err(Error::InvalidParameter(format!("{total} posterior draws cannot fill {} bins", config.bins)));
    }
    config.prior.validate()?;
    let results = map_indexed(config.exec, config.experiments, |e| -> Result<Option<([usize; 4], [f64; 4], usize)>> {
        let mut rng = child_rng(config.seed, e as u64);
        let truth = config.prior.sample(&mut rng)?;
        let data = sample_with(&AlphaParams::from_array(truth)?, config.n, &mut rng);
        let hmc = HmcConfig { seed: child_seed(config.seed, e as u64), exec: Exec::Sequential, ..config.hmc };
        match hmc_fit(&data, config.prior, &hmc) {
            Ok(fit) => {
                let kept = thin(&fit.draws, config.bins)?;
                let ranks = std::array::from_fn(|k| {
                    let coord: Vec<f64> = kept.iter().map(|a| a[k]).collect();
                    rank_statistic(truth[k], &coord)
                });
                Ok(Some((ranks, truth, fit.divergence_count)))
            }
            Err(Error::ChainFailure { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    });
    let mut report = SbcReport {
        ranks: Vec::new(),
        truths: Vec::new(),
        divergences: Vec::new(),
        bins: config.bins,
        experiments: config.experiments,
        failed: 0,
        p_values: [f64::NAN; 4],
    };
    for r in results {
        match r? {
            Some((ranks, truth, div)) => {
                report.ranks.push(ranks);
                report.truths.push(truth);
                report.divergences.push(div);
            }
            None => report.failed += 1,
        }
    }
    if !report.ranks.is_empty() {
        let h = report.histogram();
        report.p_values = std::array::from_fn(|k| chi_square_uniform_p_value(&h.iter().map(|c| c[k]).collect::<Vec<_>>()));
    }
    Ok(report)
}
