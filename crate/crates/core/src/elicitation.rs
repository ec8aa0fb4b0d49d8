//! Turning expert moment summaries into a parameter.
//!
//! The exact four-moment solution is used when it exists. Otherwise the
//! three-moment compromise (MM2) is tried, and when that is not strictly
//! positive either, an optimizer fallback: MM3 if the means are the most
//! trusted input, MM4 for a balanced fit.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::bivariate::{moments_of, rho_bounds, solve_four_moments, AlphaParams, MomentSummary};
use crate::error::{Error, Result};
use crate::estimators::{mm2, mm3, mm4, EstimateReport, ZERO_REPLACEMENT};

/// Relative tolerance of the variance-ratio equality.
pub const RATIO_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preference {
    /// Trust the means most; fall back to MM3.
    MeansFirst,
    /// Weigh all five summaries alike; fall back to MM4.
    Balanced,
}

impl std::str::FromStr for Preference {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "means_first" | "meansfirst" => Ok(Self::MeansFirst),
            "balanced" => Ok(Self::Balanced),
            other => Err(Error::InvalidParameter(format!("unknown preference {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElicitationPath {
    ExactFourMoment,
    ThreeMomentMM2,
    MM3Fallback,
    MM4Fallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElicitationResult {
    pub alpha: AlphaParams,
    pub path: ElicitationPath,
    /// |requested − achieved| for m1, m2, v1, v2, rho.
    pub discrepancy: MomentSummary,
    pub notes: Vec<String>,
}

fn check_inputs(m: &MomentSummary) -> Result<()> {
    for (name, v) in [("m1", m.m1), ("m2", m.m2)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::InvalidParameter(format!("{name} must lie in (0,1), got {v}")));
        }
    }
    for (name, v) in [("v1", m.v1), ("v2", m.v2)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
        }
    }
    if !(-1.0..=1.0).contains(&m.rho) {
        return Err(Error::InvalidParameter(format!("rho must lie in [-1,1], got {}", m.rho)));
    }
    let (b1, b2) = (m.m1 * (1.0 - m.m1), m.m2 * (1.0 - m.m2));
    if m.v1 >= b1 && m.v2 >= b2 {
        return Err(Error::InfeasibleVariance { variance: m.v1, bound: b1 });
    }
    Ok(())
}

/// True when the summary has an exact, strictly positive four-moment solution.
pub fn exactly_representable(m: &MomentSummary) -> bool {
    let a = m.m1 * (1.0 - m.m1) / m.v1;
    let b = m.m2 * (1.0 - m.m2) / m.v2;
    let ratio_ok = (a - b).abs() <= RATIO_TOL * a.abs().max(b.abs());
    ratio_ok && m.v1 < m.m1 * (1.0 - m.m1) && rho_bounds(m.m1, m.m2).contains_strictly(m.rho)
}

fn gaps(requested: &MomentSummary, alpha: &AlphaParams) -> MomentSummary {
    let got = moments_of(alpha);
    MomentSummary {
        m1: (requested.m1 - got.m1).abs(),
        m2: (requested.m2 - got.m2).abs(),
        v1: (requested.v1 - got.v1).abs(),
        v2: (requested.v2 - got.v2).abs(),
        rho: (requested.rho - got.rho).abs(),
    }
}

fn finish(requested: &MomentSummary, report: EstimateReport, path: ElicitationPath, mut notes: Vec<String>) -> ElicitationResult {
    for (k, clamped) in report.clamped.iter().enumerate() {
        if *clamped {
            notes.push(format!("alpha{} was not positive and is set to {ZERO_REPLACEMENT:e}", k + 1));
        }
    }
    let alpha = report.to_params();
    ElicitationResult { discrepancy: gaps(requested, &alpha), alpha, path, notes }
}

/// Picks a parameter for the requested summary.
pub fn elicit(requested: &MomentSummary, preference: Preference) -> Result<ElicitationResult> {
    check_inputs(requested)?;
    let m = requested;
    if exactly_representable(m) {
        let sol = solve_four_moments(m.m1, m.m2, m.v1, m.rho)?;
        if sol.feasible {
            let report = EstimateReport {
                alpha_hat: sol.alpha,
                method: crate::estimators::Method::MM1,
                clamped: [false; 4],
                converged: true,
                objective: None,
                credible_interval: None,
            };
            return Ok(finish(m, report, ElicitationPath::ExactFourMoment, Vec::new()));
        }
    }
    let mut notes = vec!["no exact four-moment solution".to_string()];
    match mm2(m) {
        Ok(r) if !r.any_clamped() && r.alpha_hat.iter().all(|&a| a > 0.0) => {
            return Ok(finish(m, r, ElicitationPath::ThreeMomentMM2, notes));
        }
        Ok(_) => notes.push("three-moment solution is not strictly positive".into()),
        Err(e) => notes.push(format!("three-moment solution failed: {e}")),
    }
    let (report, path) = match preference {
        Preference::MeansFirst => (mm3(m)?, ElicitationPath::MM3Fallback),
        Preference::Balanced => (mm4(m)?, ElicitationPath::MM4Fallback),
    };
    if !report.converged {
        notes.push("optimizer stopped before convergence".into());
    }
    Ok(finish(m, report, path, notes))
}

/// Variance of the Beta marginal with the given mean whose `level`-quantile
/// is `value`, found by bisection on the log concentration.
pub fn variance_from_quantile(mean: f64, level: f64, value: f64) -> Result<f64> {
    if !(mean > 0.0 && mean < 1.0 && level > 0.0 && level < 1.0 && value > 0.0 && value < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need mean, level and value in (0,1), got {mean}, {level}, {value}"
        )));
    }
    let gap = |log_k: f64| -> f64 {
        let k = log_k.exp();
        let beta = Beta::new(mean * k, (1.0 - mean) * k).expect("positive shapes");
        beta.cdf(value) - level
    };
    let (mut lo, mut hi) = (-20.0f64, 25.0f64);
    let (g_lo, g_hi) = (gap(lo), gap(hi));
    if g_lo.signum() == g_hi.signum() {
        return Err(Error::InvalidParameter(format!(
            "no beta with mean {mean} has its {level}-quantile at {value}"
        )));
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if gap(mid).signum() == g_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let k = (0.5 * (lo + hi)).exp();
    Ok(mean * (1.0 - mean) / (k + 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn summary(m1: f64, m2: f64, v1: f64, v2: f64, rho: f64) -> MomentSummary {
        MomentSummary { m1, m2, v1, v2, rho }
    }

    #[test]
    fn exact_path_for_uniform_dirichlet() {
        let r = elicit(&summary(0.5, 0.5, 0.05, 0.05, 0.0), Preference::Balanced).unwrap();
        assert_eq!(r.path, ElicitationPath::ExactFourMoment);
        for (a, b) in r.alpha.to_array().iter().zip([1.0; 4]) {
            assert_relative_eq!(*a, b, epsilon = 1e-12);
        }
        assert!(r.discrepancy.to_array().iter().all(|d| *d < 1e-14));
    }

    #[test]
    fn unequal_ratios_use_three_moment_path() {
        let r = elicit(&summary(0.5, 0.5, 0.05, 0.02, 0.0), Preference::Balanced).unwrap();
        assert_eq!(r.path, ElicitationPath::ThreeMomentMM2);
        assert!(r.discrepancy.m1 < 1e-12 && r.discrepancy.m2 < 1e-12 && r.discrepancy.rho < 1e-12);
    }

    #[test]
    fn infeasible_correlation_falls_back_to_mm3() {
        let req = summary(0.33, 0.30, 0.062, 0.033, -0.73);
        let r = elicit(&req, Preference::MeansFirst).unwrap();
        assert_eq!(r.path, ElicitationPath::MM3Fallback);
        assert!(r.discrepancy.m1 < 1e-12 && r.discrepancy.m2 < 1e-12, "{:?}", r.discrepancy);
        let r = elicit(&req, Preference::Balanced).unwrap();
        assert_eq!(r.path, ElicitationPath::MM4Fallback);
        assert!(r.alpha.to_array().iter().all(|&a| a > 0.0));
    }

    #[test]
    fn both_variances_too_large() {
        let r = elicit(&summary(0.5, 0.5, 0.3, 0.3, 0.0), Preference::Balanced);
        assert!(matches!(r, Err(Error::InfeasibleVariance { .. })));
    }

    #[test]
    fn quantile_conversion() {
        // Beta(2, 2): mean 0.5, variance 0.05, median 0.5 is useless, use the 0.9 quantile
        let beta = Beta::new(2.0, 2.0).unwrap();
        let q90 = beta.inverse_cdf(0.9);
        assert_relative_eq!(variance_from_quantile(0.5, 0.9, q90).unwrap(), 0.05, max_relative = 1e-7);
        let beta = Beta::new(3.0, 7.0).unwrap();
        let q10 = beta.inverse_cdf(0.1);
        let expected = 21.0 / (100.0 * 11.0);
        assert_relative_eq!(variance_from_quantile(0.3, 0.1, q10).unwrap(), expected, max_relative = 1e-7);
        assert!(variance_from_quantile(0.5, 0.9, 0.3).is_err());
    }

    proptest! {
        #[test]
        fn exact_path_iff_representable(a in proptest::array::uniform4(0.2f64..10.0), jitter in -0.2f64..0.2) {
            let alpha = AlphaParams::from_array(a).unwrap();
            let mut m = moments_of(&alpha);
            let r = elicit(&m, Preference::Balanced).unwrap();
            prop_assert_eq!(r.path, ElicitationPath::ExactFourMoment);
            for (x, y) in r.alpha.to_array().iter().zip(a) {
                prop_assert!((x - y).abs() <= 1e-8 * y);
            }
            m.v2 *= 1.0 + jitter.abs() + 0.01;
            let r = elicit(&m, Preference::Balanced).unwrap();
            prop_assert_ne!(r.path, ElicitationPath::ExactFourMoment);
            prop_assert!(r.alpha.to_array().iter().all(|&v| v > 0.0));
        }
    }
}
