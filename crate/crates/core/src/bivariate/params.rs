use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Concentration vector of the bivariate beta; all coordinates strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub alpha4: f64,
}

impl AlphaParams {
    pub fn new(alpha1: f64, alpha2: f64, alpha3: f64, alpha4: f64) -> Result<Self> {
        Self::from_array([alpha1, alpha2, alpha3, alpha4])
    }

    pub fn from_array(a: [f64; 4]) -> Result<Self> {
        if let Some(bad) = a.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "alpha coordinates must be finite and > 0, got {bad}"
            )));
        }
        Ok(Self {
            alpha1: a[0],
            alpha2: a[1],
            alpha3: a[2],
            alpha4: a[3],
        })
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.alpha1, self.alpha2, self.alpha3, self.alpha4]
    }

    /// s_α = α₁ + α₂ + α₃ + α₄.
    pub fn sum(&self) -> f64 {
        self.alpha1 + self.alpha2 + self.alpha3 + self.alpha4
    }
}

impl TryFrom<[f64; 4]> for AlphaParams {
    type Error = Error;

    fn try_from(a: [f64; 4]) -> Result<Self> {
        Self::from_array(a)
    }
}

/// Means, variances and correlation of a pair, theoretical or empirical.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub m1: f64,
    pub m2: f64,
    pub v1: f64,
    pub v2: f64,
    pub rho: f64,
}

impl MomentSummary {
    pub fn to_array(&self) -> [f64; 5] {
        [self.m1, self.m2, self.v1, self.v2, self.rho]
    }

    pub const NAMES: [&'static str; 5] = ["m1", "m2", "v1", "v2", "rho"];
}

/// Open interval of correlations reachable for fixed means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoInterval {
    pub lower: f64,
    pub upper: f64,
}

impl RhoInterval {
    pub fn contains_strictly(&self, rho: f64) -> bool {
        rho > self.lower && rho < self.upper
    }
}

/// Unconstrained solution of a moments' system; coordinates may be ≤ 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOutcome {
    pub alpha: [f64; 4],
    pub feasible: bool,
    pub bar_alpha: f64,
}

impl SolverOutcome {
    pub(crate) fn new(alpha: [f64; 4], bar_alpha: f64) -> Self {
        let feasible = alpha.iter().all(|&a| a > 0.0);
        Self {
            alpha,
            feasible,
            bar_alpha,
        }
    }

    pub fn params(&self) -> Option<AlphaParams> {
        AlphaParams::from_array(self.alpha).ok()
    }
}
