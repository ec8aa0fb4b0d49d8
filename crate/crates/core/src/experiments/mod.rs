//! Monte Carlo studies of the estimators under well-specified and
//! misspecified data.

pub mod distribution;
pub mod logit_normal;
pub mod metrics;
pub mod timing;

pub use distribution::{sampling_distribution, DistributionSummary, Statistic};
pub use logit_normal::{sample_logit_normal, true_moments, LogitNormal};
pub use metrics::{MetricRow, MetricsTable};
pub use timing::{time_estimators, TimingRow};

use std::path::PathBuf;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bayes::{be1, be2, hmc_fit, HmcConfig, PosteriorDraws, PriorSpec};
use crate::bivariate::sampling::sample_with;
use crate::bivariate::{moments_of_raw, AlphaParams, MomentSummary, PairedSample};
use crate::error::{Error, Result};
use crate::estimators::{bootstrap_ci, estimate_sample, BootstrapOptions, EstimateReport, Method};
use crate::par::{map_indexed, Exec};
use crate::rng::{child_rng, child_seed};
use metrics::{aggregate, Outcome};

/// Desk-scale replication count.
pub const DEFAULT_REPS: usize = 200;
/// Desk-scale bootstrap resamples inside each replication.
pub const DEFAULT_BOOTSTRAP: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    BivariateBeta { alpha: [f64; 4] },
    LogitNormal { mu: [f64; 2], sigma: [[f64; 2]; 2] },
}

impl Generator {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Generator::BivariateBeta { alpha } => AlphaParams::from_array(alpha).map(|_| ()),
            Generator::LogitNormal { mu, sigma } => LogitNormal::new(mu, sigma).map(|_| ()),
        }
    }

    pub fn draw_with<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<PairedSample> {
        match *self {
            Generator::BivariateBeta { alpha } => Ok(sample_with(&AlphaParams::from_array(alpha)?, n, rng)),
            Generator::LogitNormal { mu, sigma } => LogitNormal { mu, sigma }.draw_with(n, rng),
        }
    }
}

fn default_methods() -> Vec<Method> {
    Method::MOMENT_METHODS.to_vec()
}

fn default_reps() -> usize {
    DEFAULT_REPS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub generator: Generator,
    pub n: usize,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    /// Bootstrap resamples per replication for MM intervals; none skips them.
    #[serde(default)]
    pub bootstrap: Option<usize>,
    #[serde(default)]
    pub hmc: HmcConfig,
    #[serde(default)]
    pub prior: PriorSpec,
    #[serde(default = "crate::rng::default_seed")]
    pub seed: u64,
    /// Draws behind the logit-normal true-moment oracle.
    #[serde(default = "default_oracle_draws")]
    pub oracle_draws: usize,
    #[serde(default)]
    pub oracle_cache: Option<PathBuf>,
    #[serde(skip)]
    pub exec: Exec,
}

fn default_oracle_draws() -> usize {
    logit_normal::ORACLE_DRAWS
}

impl ExperimentSpec {
    pub fn new(generator: Generator, n: usize, reps: usize, methods: Vec<Method>) -> Self {
        Self {
            generator,
            n,
            reps,
            methods,
            bootstrap: None,
            hmc: HmcConfig::default(),
            prior: PriorSpec::default(),
            seed: crate::rng::DEFAULT_SEED,
            oracle_draws: logit_normal::ORACLE_DRAWS,
            oracle_cache: None,
            exec: Exec::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        if self.reps == 0 || self.n < 2 || self.methods.is_empty() {
            return Err(Error::InvalidParameter("need reps >= 1, n >= 2 and at least one method".into()));
        }
        Ok(())
    }
}

/// Every method's result on one data set: the point estimate and, where
/// available, a 95% interval per coordinate.
type Fits = Vec<Result<(EstimateReport, Option<[[f64; 2]; 4]>)>>;

fn fit_all(spec: &ExperimentSpec, data: &PairedSample, rep_seed: u64) -> Fits {
    let mut posterior: Option<Result<PosteriorDraws>> = None;
    spec.methods
        .iter()
        .enumerate()
        .map(|(j, &method)| {
            if method.is_bayes() {
                let draws = posterior.get_or_insert_with(|| {
                    let cfg = HmcConfig { seed: child_seed(rep_seed, 1000), exec: Exec::Sequential, ..spec.hmc };
                    hmc_fit(data, spec.prior, &cfg)
                });
                let draws = draws.as_ref().map_err(Clone::clone)?;
                let report = if method == Method::BE1 { be1(draws) } else { be2(draws) };
                let ci = report.credible_interval;
                Ok((report, ci))
            } else {
                let report = estimate_sample(method, data)?;
                let ci = match spec.bootstrap {
                    Some(b) => {
                        let opts = BootstrapOptions {
                            resamples: b,
                            level: 0.95,
                            seed: child_seed(rep_seed, j as u64),
                            exec: Exec::Sequential,
                        };
                        bootstrap_ci(data, method, &opts).ok().map(|c| std::array::from_fn(|k| [c.lower[k], c.upper[k]]))
                    }
                    None => None,
                };
                Ok((report, ci))
            }
        })
        .collect()
}

/// Replicates the generator `reps` times; replication r draws from stream
/// `(seed, r)`. Replications run on `spec.exec`, everything inside them
/// sequentially.
fn replicate(spec: &ExperimentSpec) -> Result<Vec<Fits>> {
    spec.validate()?;
    let runs = map_indexed(spec.exec, spec.reps, |r| -> Result<Fits> {
        let mut rng = child_rng(spec.seed, r as u64);
        let data = spec.generator.draw_with(spec.n, &mut rng)?;
        Ok(fit_all(spec, &data, child_seed(spec.seed, r as u64)))
    });
    runs.into_iter().collect()
}

/// Estimation error on α for data from a bivariate beta.
pub fn run_well_specified(spec: &ExperimentSpec) -> Result<MetricsTable> {
    let Generator::BivariateBeta { alpha } = spec.generator else {
        return Err(Error::InvalidParameter("well-specified runs need a bivariate beta generator".into()));
    };
    let runs = replicate(spec)?;
    let mut rows = Vec::new();
    for (j, &method) in spec.methods.iter().enumerate() {
        for k in 0..4 {
            let outcomes: Vec<Option<Outcome>> = runs
                .iter()
                .map(|fits| {
                    fits[j].as_ref().ok().map(|(rep, ci)| Outcome {
                        estimate: rep.alpha_hat[k],
                        covered: ci.map(|c| c[k][0] <= alpha[k] && alpha[k] <= c[k][1]),
                    })
                })
                .collect();
            rows.push(aggregate(method, &format!("alpha{}", k + 1), alpha[k], &outcomes));
        }
    }
    Ok(MetricsTable { n: spec.n, reps: spec.reps, rows })
}

/// Error of the fitted model's moments against the generator's true moments.
pub fn run_misspecified(spec: &ExperimentSpec) -> Result<MetricsTable> {
    let Generator::LogitNormal { mu, sigma } = spec.generator else {
        return Err(Error::InvalidParameter("misspecified runs need a logit-normal generator".into()));
    };
    let truth = true_moments(&LogitNormal::new(mu, sigma)?, spec.oracle_draws, spec.oracle_cache.as_deref(), spec.exec)?;
    let runs = replicate(spec)?;
    Ok(MetricsTable { n: spec.n, reps: spec.reps, rows: moment_rows(spec, &runs, &truth) })
}

fn moment_rows(spec: &ExperimentSpec, runs: &[Fits], truth: &MomentSummary) -> Vec<MetricRow> {
    let mut rows = Vec::new();
    let t = truth.to_array();
    for (j, &method) in spec.methods.iter().enumerate() {
        let implied: Vec<Option<[f64; 5]>> = runs
            .iter()
            .map(|fits| {
                fits[j]
                    .as_ref()
                    .ok()
                    .and_then(|(rep, _)| moments_of_raw(&rep.alpha_hat))
                    .map(|m| m.to_array())
            })
            .collect();
        for (q, name) in MomentSummary::NAMES.iter().enumerate() {
            let outcomes: Vec<Option<Outcome>> =
                implied.iter().map(|m| m.map(|m| Outcome { estimate: m[q], covered: None })).collect();
            rows.push(aggregate(method, name, t[q], &outcomes));
        }
    }
    rows
}

/// Dispatches on the generator kind.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<MetricsTable> {
    match spec.generator {
        Generator::BivariateBeta { .. } => run_well_specified(spec),
        Generator::LogitNormal { .. } => run_misspecified(spec),
    }
}
