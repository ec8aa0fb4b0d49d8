//! Posterior predictive moment checks and prior predictive correlation.

use serde::{Deserialize, Serialize};

use super::fit::PosteriorDraws;
use super::prior::PriorSpec;
use crate::bivariate::{moments_of_raw, MomentSummary, PairedSample};
use crate::error::Result;
use crate::estimators::empirical_moments;
use crate::rng::rng_from_seed;
use crate::stats::{quantile_sorted, sorted_copy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub moment: String,
    pub q025: f64,
    pub q50: f64,
    pub q975: f64,
    pub observed: f64,
    pub inside: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpcReport {
    /// m1, m2, v1, v2, rho in that order.
    pub checks: Vec<MomentCheck>,
}

impl PpcReport {
    pub fn all_inside(&self) -> bool {
        self.checks.iter().all(|c| c.inside)
    }

    pub fn check(&self, moment: &str) -> Option<&MomentCheck> {
        self.checks.iter().find(|c| c.moment == moment)
    }
}

/// Compares the data's moments with the distribution of moments implied by
/// each posterior draw.
pub fn ppc(draws: &PosteriorDraws, data: &PairedSample) -> Result<PpcReport> {
    let observed = empirical_moments(data)?.to_array();
    let implied: Vec<[f64; 5]> = draws
        .draws
        .iter()
        .filter_map(|a| moments_of_raw(a).map(|m| m.to_array()))
        .collect();
    let checks = MomentSummary::NAMES
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let col = sorted_copy(&implied.iter().map(|m| m[j]).collect::<Vec<_>>());
            let (lo, hi) = (quantile_sorted(&col, 0.025), quantile_sorted(&col, 0.975));
            MomentCheck {
                moment: name.to_string(),
                q025: lo,
                q50: quantile_sorted(&col, 0.5),
                q975: hi,
                observed: observed[j],
                inside: lo <= observed[j] && observed[j] <= hi,
            }
        })
        .collect();
    Ok(PpcReport { checks })
}

/// Correlations Cor(X, Y) implied by `count` parameters drawn from `prior`.
pub fn prior_predictive_correlation(prior: &PriorSpec, count: usize, seed: u64) -> Result<Vec<f64>> {
    prior.validate()?;
    let mut rng = rng_from_seed(seed);
    (0..count)
        .map(|_| {
            let a = prior.sample(&mut rng)?;
            Ok(moments_of_raw(&a).map_or(0.0, |m| m.rho))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bivariate::{moments_of, sample, AlphaParams};
    use crate::stats::{median, skewness};

    #[test]
    fn degenerate_draws_give_point_intervals() {
        let a = [2.0, 3.0, 0.7, 1.0];
        let draws = PosteriorDraws::from_draws(vec![a; 10]).unwrap();
        let data = sample(&AlphaParams::from_array(a).unwrap(), 50, 1);
        let report = ppc(&draws, &data).unwrap();
        let truth = moments_of(&AlphaParams::from_array(a).unwrap()).to_array();
        for (c, t) in report.checks.iter().zip(truth) {
            assert_eq!(c.q025, t);
            assert_eq!(c.q975, t);
        }
        assert_eq!(report.checks.len(), 5);
    }

    #[test]
    fn point_mass_prior_correlation() {
        let p = PriorSpec::point_mass([1.0; 4]).unwrap();
        assert!(prior_predictive_correlation(&p, 100, 1).unwrap().iter().all(|&r| r == 0.0));
    }

    #[test]
    fn symmetric_gamma_gives_symmetric_correlation() {
        for a in [0.5, 1.0, 3.0] {
            let p = PriorSpec::gamma_iid(a, a).unwrap();
            let rho = prior_predictive_correlation(&p, 100_000, 7).unwrap();
            assert!(skewness(&rho).abs() < 0.1, "a = {a}: skew {}", skewness(&rho));
        }
    }

    #[test]
    fn heavier_diagonal_shapes_push_correlation_up() {
        let p: PriorSpec = "gamma:2,1,1,2/1,1,1,1".parse().unwrap();
        let rho = prior_predictive_correlation(&p, 20_000, 8).unwrap();
        assert!(median(&rho) > 0.0);
    }
}
