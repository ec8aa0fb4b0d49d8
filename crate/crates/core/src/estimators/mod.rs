//! Method-of-moments estimation (MM1–MM4) and bootstrap intervals.

mod bootstrap;
mod methods;

pub use bootstrap::{bootstrap_ci, BootstrapCI, BootstrapOptions};
pub use methods::{empirical_moments, estimate, estimate_sample, mm1, mm2, mm3, mm4, mm3_objective, mm4_objective};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bivariate::AlphaParams;
use crate::error::Error;

/// Replacement for clamped zeros where a strictly positive parameter is needed.
pub const ZERO_REPLACEMENT: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    MM1,
    MM2,
    MM3,
    MM4,
    BE1,
    BE2,
}

impl Method {
    pub const MOMENT_METHODS: [Method; 4] = [Method::MM1, Method::MM2, Method::MM3, Method::MM4];
    pub const ALL: [Method; 6] = [Method::MM1, Method::MM2, Method::MM3, Method::MM4, Method::BE1, Method::BE2];

    pub fn is_bayes(self) -> bool {
        matches!(self, Method::BE1 | Method::BE2)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Method::ALL
            .into_iter()
            .find(|m| m.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method {s:?}")))
    }
}

/// Point estimate of α with bookkeeping about how it was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub alpha_hat: [f64; 4],
    pub method: Method,
    /// Coordinate was non-positive before truncation at zero.
    pub clamped: [bool; 4],
    /// Always true for the closed-form methods.
    pub converged: bool,
    /// Final objective value (MM3/MM4 only).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub objective: Option<f64>,
    /// Equal-tailed 95% credible interval per coordinate (BE1/BE2 only).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub credible_interval: Option<[[f64; 2]; 4]>,
}

impl EstimateReport {
    pub(crate) fn closed_form(method: Method, raw: [f64; 4]) -> Self {
        Self {
            alpha_hat: raw.map(|a| a.max(0.0)),
            method,
            clamped: raw.map(|a| a <= 0.0),
            converged: true,
            objective: None,
            credible_interval: None,
        }
    }

    pub fn any_clamped(&self) -> bool {
        self.clamped.iter().any(|&c| c)
    }

    /// Strictly positive parameter, with clamped zeros replaced by
    /// [`ZERO_REPLACEMENT`].
    pub fn to_params(&self) -> AlphaParams {
        AlphaParams::from_array(self.alpha_hat.map(|a| if a > 0.0 { a } else { ZERO_REPLACEMENT }))
            .expect("replacement makes every coordinate positive")
    }
}
