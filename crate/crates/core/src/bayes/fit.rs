//! Multi-chain posterior fits and the Bayes point estimators.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::convergence::{bulk_ess, split_rhat};
use super::nuts::{run_chain, Adaptation, ChainConfig};
use super::posterior::AugmentedPosterior;
use super::prior::PriorSpec;
use crate::bivariate::sample::format_g17;
use crate::bivariate::PairedSample;
use crate::error::{Error, Result};
use crate::estimators::{EstimateReport, Method};
use crate::par::{map_indexed, Exec};
use crate::rng::child_rng;
use crate::stats::{mean, quantile_sorted, sorted_copy};

/// Attempts at a finite initial point per chain.
pub const INIT_ATTEMPTS: usize = 100;
/// R̂ threshold behind [`EstimateReport::converged`] for BE1/BE2.
pub const RHAT_OK: f64 = 1.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HmcConfig {
    pub chains: usize,
    pub warmup: usize,
    pub iters: usize,
    pub target_accept: f64,
    pub max_depth: usize,
    pub seed: u64,
    /// Keep the latent u draws in the output.
    pub keep_latent: bool,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for HmcConfig {
    fn default() -> Self {
        Self {
            chains: 4,
            warmup: 2000,
            iters: 2000,
            target_accept: 0.9,
            max_depth: 10,
            seed: crate::rng::DEFAULT_SEED,
            keep_latent: false,
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDraws {
    /// α draws, chain after chain, `iters` per chain.
    pub draws: Vec<[f64; 4]>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub latent_draws: Option<Vec<Vec<f64>>>,
    pub divergence_count: usize,
    pub accept_rate: f64,
    pub rhat: [f64; 4],
    pub ess: [f64; 4],
    pub chains: usize,
    pub warmup: usize,
    pub iters: usize,
    pub step_sizes: Vec<f64>,
    pub mean_tree_depth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerDiagnostics {
    pub rhat: [f64; 4],
    pub ess: [f64; 4],
    pub divergences: usize,
    pub accept_rate: f64,
    pub chains: usize,
    pub warmup: usize,
    pub iters: usize,
    pub step_sizes: Vec<f64>,
    pub mean_tree_depth: f64,
}

impl PosteriorDraws {
    /// Wraps externally produced draws as a single chain without diagnostics.
    pub fn from_draws(draws: Vec<[f64; 4]>) -> Result<Self> {
        if draws.is_empty() {
            return Err(Error::InvalidParameter("no draws".into()));
        }
        if draws.iter().flatten().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(Error::InvalidParameter("draws must be positive and finite".into()));
        }
        let iters = draws.len();
        Ok(Self {
            draws,
            latent_draws: None,
            divergence_count: 0,
            accept_rate: f64::NAN,
            rhat: [f64::NAN; 4],
            ess: [f64::NAN; 4],
            chains: 1,
            warmup: 0,
            iters,
            step_sizes: Vec::new(),
            mean_tree_depth: f64::NAN,
        })
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn coordinate(&self, k: usize) -> Vec<f64> {
        self.draws.iter().map(|a| a[k]).collect()
    }

    pub fn diagnostics(&self) -> SamplerDiagnostics {
        SamplerDiagnostics {
            rhat: self.rhat,
            ess: self.ess,
            divergences: self.divergence_count,
            accept_rate: self.accept_rate,
            chains: self.chains,
            warmup: self.warmup,
            iters: self.iters,
            step_sizes: self.step_sizes.clone(),
            mean_tree_depth: self.mean_tree_depth,
        }
    }

    pub fn write_diagnostics_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, &self.diagnostics()).map_err(|e| Error::Io(e.to_string()))
    }

    /// CSV with header `chain,iter,alpha1,alpha2,alpha3,alpha4`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "chain,iter,alpha1,alpha2,alpha3,alpha4")?;
        for (j, a) in self.draws.iter().enumerate() {
            let (chain, iter) = (j / self.iters, j % self.iters);
            writeln!(
                out,
                "{chain},{iter},{},{},{},{}",
                format_g17(a[0]),
                format_g17(a[1]),
                format_g17(a[2]),
                format_g17(a[3])
            )?;
        }
        Ok(())
    }

    pub fn credible_interval(&self, level: f64) -> [[f64; 2]; 4] {
        let tail = (1.0 - level) / 2.0;
        std::array::from_fn(|k| {
            let s = sorted_copy(&self.coordinate(k));
            [quantile_sorted(&s, tail), quantile_sorted(&s, 1.0 - tail)]
        })
    }

    pub fn all_rhat_below(&self, threshold: f64) -> bool {
        self.rhat.iter().all(|r| *r < threshold)
    }
}

fn initial_point<R: Rng + ?Sized>(post: &AugmentedPosterior, rng: &mut R, chain: usize) -> Result<Vec<f64>> {
    let mut grad = vec![0.0; 4 + post.n()];
    for _ in 0..INIT_ATTEMPTS {
        let mut q = vec![0.0; 4 + post.n()];
        for t in q.iter_mut().take(4) {
            *t = rng.random_range(-1.0..=1.0);
        }
        let lp = post.log_density_and_gradient(&q, &mut grad);
        if lp.is_finite() && grad.iter().all(|g| g.is_finite()) {
            return Ok(q);
        }
    }
    Err(Error::ChainFailure {
        chain,
        reason: format!("no finite initial point in {INIT_ATTEMPTS} attempts"),
    })
}

/// Samples the augmented posterior with `config.chains` independent chains;
/// chain c uses the child stream `(seed, c)`.
pub fn hmc_fit(data: &PairedSample, prior: PriorSpec, config: &HmcConfig) -> Result<PosteriorDraws> {
    if data.len() < 2 {
        return Err(Error::InvalidSample(format!("need at least 2 pairs, got {}", data.len())));
    }
    if config.chains == 0 || config.iters < 4 {
        return Err(Error::InvalidParameter("need at least one chain and 4 iterations".into()));
    }
    let post = AugmentedPosterior::new(data, prior)?;
    let chain_config = ChainConfig {
        warmup: config.warmup,
        iters: config.iters,
        target_accept: config.target_accept,
        max_depth: config.max_depth,
        max_delta_h: 1000.0,
        adaptation: Adaptation::Full,
    };
    let outputs = map_indexed(config.exec, config.chains, |c| {
        let mut rng = child_rng(config.seed, c as u64);
        let init = initial_point(&post, &mut rng, c)?;
        run_chain(&post, &init, &chain_config, &mut rng).map_err(|e| match e {
            Error::ChainFailure { reason, .. } => Error::ChainFailure { chain: c, reason },
            other => other,
        })
    });
    let outputs: Vec<_> = outputs.into_iter().collect::<Result<_>>()?;

    let mut draws = Vec::with_capacity(config.chains * config.iters);
    let mut latent = config.keep_latent.then(Vec::new);
    let mut per_coord: [Vec<Vec<f64>>; 4] = Default::default();
    for out in &outputs {
        let alphas: Vec<[f64; 4]> = out.draws.iter().map(|q| post.alpha(&q[..4])).collect();
        for (k, coord) in per_coord.iter_mut().enumerate() {
            coord.push(alphas.iter().map(|a| a[k]).collect());
        }
        if let Some(l) = latent.as_mut() {
            l.extend(out.draws.iter().map(|q| post.latent(&q[4..])));
        }
        draws.extend(alphas);
    }
    if draws.iter().flatten().any(|a| !(*a > 0.0 && a.is_finite())) {
        return Err(Error::ChainFailure { chain: 0, reason: "non-finite α draw".into() });
    }
    let accept: Vec<f64> = outputs.iter().flat_map(|o| o.accept_stats.iter().copied()).collect();
    let depths: Vec<f64> = outputs.iter().flat_map(|o| o.tree_depths.iter().map(|&d| d as f64)).collect();
    Ok(PosteriorDraws {
        draws,
        latent_draws: latent,
        divergence_count: outputs.iter().map(|o| o.divergences).sum(),
        accept_rate: mean(&accept),
        rhat: std::array::from_fn(|k| split_rhat(&per_coord[k])),
        ess: std::array::from_fn(|k| bulk_ess(&per_coord[k])),
        chains: config.chains,
        warmup: config.warmup,
        iters: config.iters,
        step_sizes: outputs.iter().map(|o| o.step_size).collect(),
        mean_tree_depth: mean(&depths),
    })
}

fn bayes_report(draws: &PosteriorDraws, method: Method, point: impl Fn(&[f64]) -> f64) -> EstimateReport {
    let alpha_hat = std::array::from_fn(|k| point(&draws.coordinate(k)));
    let converged = draws.rhat.iter().all(|r| r.is_nan() || *r < RHAT_OK);
    EstimateReport {
        alpha_hat,
        method,
        clamped: [false; 4],
        converged,
        objective: None,
        credible_interval: Some(draws.credible_interval(0.95)),
    }
}

/// Posterior mean.
pub fn be1(draws: &PosteriorDraws) -> EstimateReport {
    bayes_report(draws, Method::BE1, mean)
}

/// Posterior median.
pub fn be2(draws: &PosteriorDraws) -> EstimateReport {
    bayes_report(draws, Method::BE2, crate::stats::median)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bivariate::{sample, AlphaParams};

    #[test]
    fn single_draw_estimators() {
        let d = PosteriorDraws::from_draws(vec![[2.0, 3.0, 4.0, 5.0]]).unwrap();
        assert_eq!(be1(&d).alpha_hat, [2.0, 3.0, 4.0, 5.0]);
        assert_eq!(be2(&d).alpha_hat, [2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn symmetric_pair_mean() {
        let d = PosteriorDraws::from_draws(vec![[1.0; 4], [3.0; 4]]).unwrap();
        assert_eq!(be1(&d).alpha_hat, [2.0; 4]);
        assert_eq!(be1(&d).method, Method::BE1);
        assert!(be1(&d).credible_interval.is_some());
    }

    #[test]
    fn csv_layout() {
        let mut d = PosteriorDraws::from_draws(vec![[1.0; 4], [2.0; 4], [3.0; 4], [4.0; 4]]).unwrap();
        d.chains = 2;
        d.iters = 2;
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "chain,iter,alpha1,alpha2,alpha3,alpha4");
        assert_eq!(lines[3], "1,0,3,3,3,3");
        let mut buf = Vec::new();
        d.write_diagnostics_json(&mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        for key in ["rhat", "ess", "divergences", "accept_rate"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn small_fit_is_reproducible_and_healthy() {
        let data = sample(&AlphaParams::new(2.0, 3.0, 4.0, 2.0).unwrap(), 40, 17);
        let config = HmcConfig { chains: 2, warmup: 300, iters: 300, seed: 5, ..Default::default() };
        let a = hmc_fit(&data, PriorSpec::default(), &config).unwrap();
        let b = hmc_fit(&data, PriorSpec::default(), &HmcConfig { exec: Exec::Sequential, ..config }).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 600);
        assert!(a.draws.iter().flatten().all(|&v| v > 0.0));
        assert!(a.rhat.iter().all(|r| *r < 1.1), "{:?}", a.rhat);
        assert!(a.ess.iter().all(|e| *e > 0.0 && *e <= 600.0));
    }

    #[test]
    fn too_small_data_is_rejected() {
        let data = PairedSample::from_pairs(&[(0.2, 0.3)]).unwrap();
        assert!(matches!(hmc_fit(&data, PriorSpec::default(), &HmcConfig::default()), Err(Error::InvalidSample(_))));
    }

    #[test]
    fn latent_draws_stay_in_their_intervals() {
        let data = sample(&AlphaParams::new(0.8, 1.5, 1.2, 0.9).unwrap(), 10, 3);
        let config = HmcConfig { chains: 1, warmup: 100, iters: 50, keep_latent: true, ..Default::default() };
        let fit = hmc_fit(&data, PriorSpec::default(), &config).unwrap();
        let latent = fit.latent_draws.unwrap();
        assert_eq!(latent.len(), 50);
        for u in &latent {
            for ((x, y), &ui) in data.pairs().zip(u) {
                assert!(ui > (x + y - 1.0).max(0.0) && ui < x.min(y));
            }
        }
    }
}
