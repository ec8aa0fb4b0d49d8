//! Goodness-of-fit checks for the bivariate beta model.
//!
//! Under the model the marginal means and variances satisfy
//! X̄(1−X̄)/S²_X = Ȳ(1−Ȳ)/S²_Y in the limit. The G_n test studentizes the
//! sample gap with the delta method. The M test looks at the smallest
//! coordinate of the unconstrained four-moment solution scaled by ᾱ, which
//! goes negative when no bivariate beta matches the data.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bivariate::{solve_four_moments, MomentSummary, PairedSample};
use crate::error::{Error, Result};
use crate::estimators::empirical_moments;
use crate::par::{map_indexed, Exec};
use crate::rng::child_rng;
use crate::special::normal_cdf;
use crate::stats::{quantile_sorted, sorted_copy};

/// Default rejection threshold of the M test.
pub const DEFAULT_M_THRESHOLD: f64 = -0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GnReport {
    pub g_n: f64,
    pub sigma_hat: f64,
    pub z: f64,
    pub p_value: f64,
}

/// g(x₁, x₂, x₃, x₄) = x₁(1−x₁)x₄ − x₂(1−x₃)x₃ and its gradient.
fn g_and_gradient(x: [f64; 4]) -> (f64, [f64; 4]) {
    let [x1, x2, x3, x4] = x;
    let g = x1 * (1.0 - x1) * x4 - x2 * (1.0 - x3) * x3;
    let grad = [(1.0 - 2.0 * x1) * x4, -(1.0 - x3) * x3, -x2 * (1.0 - 2.0 * x3), x1 * (1.0 - x1)];
    (g, grad)
}

/// Asymptotic test of the variance-ratio relation.
pub fn gn_test(sample: &PairedSample) -> Result<GnReport> {
    let n = sample.len();
    if n < 5 {
        return Err(Error::InvalidSample(format!("need at least 5 pairs, got {n}")));
    }
    let nf = n as f64;
    let xbar = sample.xs().iter().sum::<f64>() / nf;
    let ybar = sample.ys().iter().sum::<f64>() / nf;
    let vectors: Vec<[f64; 4]> = sample
        .pairs()
        .map(|(x, y)| [x, (x - xbar).powi(2), y, (y - ybar).powi(2)])
        .collect();
    let mut centre = [0.0; 4];
    for v in &vectors {
        for j in 0..4 {
            centre[j] += v[j] / nf;
        }
    }
    let mut cov = [[0.0; 4]; 4];
    for v in &vectors {
        for a in 0..4 {
            for b in 0..4 {
                cov[a][b] += (v[a] - centre[a]) * (v[b] - centre[b]) / (nf - 1.0);
            }
        }
    }
    // S² with divisor n − 1
    let s2x = centre[1] * nf / (nf - 1.0);
    let s2y = centre[3] * nf / (nf - 1.0);
    let (g_n, grad) = g_and_gradient([xbar, s2x, ybar, s2y]);
    let mut var = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            var += grad[a] * cov[a][b] * grad[b];
        }
    }
    let sigma_hat = var.max(0.0).sqrt();
    if !(sigma_hat > 0.0 && sigma_hat.is_finite()) {
        return Err(Error::DegenerateVariance);
    }
    let z = nf.sqrt() * g_n / sigma_hat;
    Ok(GnReport { g_n, sigma_hat, z, p_value: 2.0 * normal_cdf(-z.abs()) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MBootstrap {
    pub resamples: usize,
    /// Resamples without a positive ᾱ, left out.
    pub dropped: usize,
    pub q01: f64,
    pub q05: f64,
    pub q10: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MReport {
    pub m_stat: f64,
    pub beta_hat: [f64; 4],
    pub threshold: f64,
    pub reject: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bootstrap: Option<MBootstrap>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MTestOptions {
    pub threshold: f64,
    /// Bootstrap resamples for the quantiles of M; none when absent.
    pub bootstrap: Option<usize>,
    pub seed: u64,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for MTestOptions {
    fn default() -> Self {
        Self { threshold: DEFAULT_M_THRESHOLD, bootstrap: None, seed: crate::rng::DEFAULT_SEED, exec: Exec::default() }
    }
}

/// β̂ = α̂/ᾱ from the unconstrained four-moment solution.
pub fn beta_hat(sample: &PairedSample) -> Result<[f64; 4]> {
    beta_hat_from_moments(&empirical_moments(sample)?)
}

pub fn beta_hat_from_moments(m: &MomentSummary) -> Result<[f64; 4]> {
    let sol = solve_four_moments(m.m1, m.m2, m.v1, m.rho)?;
    Ok(sol.alpha.map(|a| a / sol.bar_alpha))
}

fn min4(v: &[f64; 4]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn m_test(sample: &PairedSample, options: &MTestOptions) -> Result<MReport> {
    let beta = beta_hat(sample)?;
    let m_stat = min4(&beta);
    let bootstrap = match options.bootstrap {
        None => None,
        Some(b) => {
            let n = sample.len();
            let stats = map_indexed(options.exec, b, |i| {
                let mut rng = child_rng(options.seed, i as u64);
                let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                beta_hat(&sample.select(&idx)).ok().map(|b| min4(&b))
            });
            let kept: Vec<f64> = stats.iter().flatten().copied().collect();
            let dropped = b - kept.len();
            let sorted = sorted_copy(&kept);
            let q = |p: f64| if sorted.is_empty() { f64::NAN } else { quantile_sorted(&sorted, p) };
            Some(MBootstrap { resamples: b, dropped, q01: q(0.01), q05: q(0.05), q10: q(0.10) })
        }
    };
    Ok(MReport { m_stat, beta_hat: beta, threshold: options.threshold, reject: m_stat <= options.threshold, bootstrap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bivariate::{sample, AlphaParams};
    use approx::assert_relative_eq;

    #[test]
    fn identical_columns_give_zero_statistic() {
        let s = sample(&AlphaParams::new(1.0, 2.0, 3.0, 4.0).unwrap(), 100, 1);
        let same = PairedSample::new(s.xs().to_vec(), s.xs().to_vec()).unwrap();
        let r = gn_test(&same);
        // σ̂ is zero too when the columns coincide
        assert!(matches!(r, Err(Error::DegenerateVariance)) || r.unwrap().g_n.abs() < 1e-15);
    }

    #[test]
    fn zero_gap_gives_unit_p_value() {
        // y = 1 − x keeps the ratio exactly while the 4-vector stays non-degenerate
        let s = sample(&AlphaParams::new(1.0, 2.0, 3.0, 4.0).unwrap(), 100, 1);
        let flipped = PairedSample::new(s.xs().to_vec(), s.xs().iter().map(|x| 1.0 - x).collect()).unwrap();
        let r = gn_test(&flipped).unwrap();
        assert!(r.g_n.abs() < 1e-15, "{}", r.g_n);
        assert!(r.p_value > 1.0 - 1e-9);
    }

    #[test]
    fn swap_negates() {
        let s = sample(&AlphaParams::new(2.0, 3.0, 7.0, 1.0).unwrap(), 200, 3);
        let a = gn_test(&s).unwrap();
        let b = gn_test(&s.swapped()).unwrap();
        assert_relative_eq!(a.g_n, -b.g_n, max_relative = 1e-12);
        assert_relative_eq!(a.z.abs(), b.z.abs(), max_relative = 1e-10);
        assert_relative_eq!(a.p_value, b.p_value, max_relative = 1e-10);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let x = [0.3, 0.02, 0.6, 0.05];
        let (_, grad) = g_and_gradient(x);
        for j in 0..4 {
            let (mut hi, mut lo) = (x, x);
            hi[j] += 1e-7;
            lo[j] -= 1e-7;
            let fd = (g_and_gradient(hi).0 - g_and_gradient(lo).0) / 2e-7;
            assert_relative_eq!(grad[j], fd, max_relative = 1e-6);
        }
    }

    #[test]
    fn beta_hat_identities() {
        let s = sample(&AlphaParams::new(0.5, 1.5, 2.0, 0.3).unwrap(), 80, 9);
        let r = m_test(&s, &MTestOptions::default()).unwrap();
        let xbar = s.xs().iter().sum::<f64>() / 80.0;
        let ybar = s.ys().iter().sum::<f64>() / 80.0;
        let b = r.beta_hat;
        assert!((b[0] + b[1] - xbar).abs() < 1e-12);
        assert!((b[0] + b[2] - ybar).abs() < 1e-12);
        assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(r.m_stat, min4(&b));
        assert_eq!(r.reject, r.m_stat <= -0.05);
    }

    #[test]
    fn unit_parameters_give_quarters() {
        let m = crate::bivariate::moments_of(&AlphaParams::new(1.0, 1.0, 1.0, 1.0).unwrap());
        let b = beta_hat_from_moments(&m).unwrap();
        for v in b {
            assert_relative_eq!(v, 0.25, epsilon = 1e-14);
        }
    }

    #[test]
    fn correlation_outside_bounds_makes_m_nonpositive() {
        let m = MomentSummary { m1: 0.3, m2: 0.6, v1: 0.02, v2: 0.03, rho: 0.95 };
        assert!(!crate::bivariate::rho_bounds(0.3, 0.6).contains_strictly(0.95));
        assert!(min4(&beta_hat_from_moments(&m).unwrap()) <= 0.0);
    }

    #[test]
    fn bootstrap_quantiles_are_ordered() {
        let s = sample(&AlphaParams::new(1.0, 1.0, 1.0, 1.0).unwrap(), 60, 2);
        let opts = MTestOptions { bootstrap: Some(300), ..Default::default() };
        let b = m_test(&s, &opts).unwrap().bootstrap.unwrap();
        assert!(b.q01 <= b.q05 && b.q05 <= b.q10);
        assert_eq!(b.resamples, 300);
    }

    #[test]
    fn too_few_pairs() {
        let s = PairedSample::from_pairs(&[(0.1, 0.2), (0.3, 0.4), (0.5, 0.1), (0.2, 0.2)]).unwrap();
        assert!(matches!(gn_test(&s), Err(Error::InvalidSample(_))));
    }
}
