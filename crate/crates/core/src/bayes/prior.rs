//! Independent priors on the four shape parameters.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bivariate::sampling::log_gamma_variate;
use crate::error::{Error, Result};
use crate::special::ln_gamma;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PriorFamily {
    /// αᵢ ~ Gamma(shapeᵢ, rateᵢ) independently.
    Gamma { shape: [f64; 4], rate: [f64; 4] },
    /// Flat on (0, C] with mass p, exponential tail above C with the rate that
    /// makes the density continuous.
    UniformExponential { cutoff: f64, mass: f64 },
    /// All mass on one parameter. Usable for prior simulation only.
    PointMass { alpha: [f64; 4] },
}

/// A prior family, optionally truncated below at `lower` in every coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    #[serde(flatten)]
    pub family: PriorFamily,
    #[serde(default)]
    pub lower: f64,
}

impl Default for PriorSpec {
    fn default() -> Self {
        Self::gamma_iid(1.0, 1.0).expect("unit gamma is valid")
    }
}

/// Draws a truncated variate by rejection before giving up.
const MAX_REJECTIONS: usize = 100_000;

impl PriorSpec {
    pub fn new(family: PriorFamily, lower: f64) -> Result<Self> {
        let spec = Self { family, lower };
        spec.validate()?;
        Ok(spec)
    }

    pub fn gamma_iid(shape: f64, rate: f64) -> Result<Self> {
        Self::new(PriorFamily::Gamma { shape: [shape; 4], rate: [rate; 4] }, 0.0)
    }

    pub fn uniform_exponential(cutoff: f64, mass: f64) -> Result<Self> {
        Self::new(PriorFamily::UniformExponential { cutoff, mass }, 0.0)
    }

    pub fn point_mass(alpha: [f64; 4]) -> Result<Self> {
        Self::new(PriorFamily::PointMass { alpha }, 0.0)
    }

    pub fn truncated_below(self, lower: f64) -> Result<Self> {
        Self::new(self.family, lower)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.lower >= 0.0 && self.lower.is_finite()) {
            return bad(format!("truncation point must be finite and >= 0, got {}", self.lower));
        }
        match self.family {
            PriorFamily::Gamma { shape, rate } => {
                if shape.iter().chain(&rate).any(|v| !(*v > 0.0 && v.is_finite())) {
                    return bad(format!("gamma shape and rate must be positive, got {shape:?}, {rate:?}"));
                }
            }
            PriorFamily::UniformExponential { cutoff, mass } => {
                if !(cutoff > 0.0 && cutoff.is_finite()) || !(mass > 0.0 && mass < 1.0) {
                    return bad(format!("need C > 0 and p in (0,1), got C={cutoff}, p={mass}"));
                }
                if self.lower >= cutoff {
                    return bad(format!("truncation {} must lie below the cutoff {cutoff}", self.lower));
                }
            }
            PriorFamily::PointMass { alpha } => {
                if alpha.iter().any(|v| !(*v > self.lower && v.is_finite())) {
                    return bad(format!("point mass {alpha:?} outside the support"));
                }
            }
        }
        Ok(())
    }

    /// Tail rate λ = p / (C (1 − p)) of the uniform-exponential family.
    pub fn exponential_rate(cutoff: f64, mass: f64) -> f64 {
        mass / (cutoff * (1.0 - mass))
    }

    pub fn has_density(&self) -> bool {
        !matches!(self.family, PriorFamily::PointMass { .. })
    }

    /// log π(αᵢ) for coordinate `i` and its derivative in αᵢ. The truncation
    /// normalizing constant is omitted.
    pub fn log_density_coord(&self, i: usize, a: f64) -> (f64, f64) {
        if a <= self.lower {
            return (f64::NEG_INFINITY, 0.0);
        }
        match self.family {
            PriorFamily::Gamma { shape, rate } => {
                let (k, b) = (shape[i], rate[i]);
                let value = k * b.ln() - ln_gamma(k) + (k - 1.0) * a.ln() - b * a;
                (value, (k - 1.0) / a - b)
            }
            PriorFamily::UniformExponential { cutoff, mass } => {
                let lambda = Self::exponential_rate(cutoff, mass);
                if a <= cutoff {
                    ((mass / cutoff).ln(), 0.0)
                } else {
                    (((1.0 - mass) * lambda).ln() - lambda * (a - cutoff), -lambda)
                }
            }
            PriorFamily::PointMass { .. } => (f64::NEG_INFINITY, 0.0),
        }
    }

    pub fn log_density(&self, alpha: &[f64; 4]) -> f64 {
        (0..4).map(|i| self.log_density_coord(i, alpha[i]).0).sum()
    }

    fn draw_untruncated<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> f64 {
        match self.family {
            PriorFamily::Gamma { shape, rate } => log_gamma_variate(shape[i], rng).exp() / rate[i],
            PriorFamily::UniformExponential { cutoff, mass } => {
                let u: f64 = 1.0 - rng.random::<f64>();
                if rng.random::<f64>() < mass {
                    cutoff * u
                } else {
                    cutoff - u.ln() / Self::exponential_rate(cutoff, mass)
                }
            }
            PriorFamily::PointMass { alpha } => alpha[i],
        }
    }

    /// One α from the (truncated) prior.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<[f64; 4]> {
        let mut out = [0.0; 4];
        for (i, slot) in out.iter_mut().enumerate() {
            let mut tries = 0;
            *slot = loop {
                let v = self.draw_untruncated(i, rng);
                if v > self.lower && v > 0.0 {
                    break v;
                }
                tries += 1;
                if tries == MAX_REJECTIONS {
                    return Err(Error::InvalidParameter(format!(
                        "prior mass above the truncation point {} is too small to sample",
                        self.lower
                    )));
                }
            };
        }
        Ok(out)
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("invalid number {t:?} in prior")))
        })
        .collect()
}

fn spread(v: &[f64], what: &str) -> Result<[f64; 4]> {
    match v.len() {
        1 => Ok([v[0]; 4]),
        4 => Ok([v[0], v[1], v[2], v[3]]),
        _ => Err(Error::InvalidParameter(format!("{what} needs 1 or 4 values, got {}", v.len()))),
    }
}

/// Parses `gamma`, `gamma:A,B`, `gamma:A1,A2,A3,A4/B1,B2,B3,B4`,
/// `uniform-exp:C,P` or `point:A1,A2,A3,A4`, each optionally followed by
/// `@L` for truncation below L.
impl FromStr for PriorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (body, lower) = match s.split_once('@') {
            Some((b, l)) => (b, parse_list(l)?[0]),
            None => (s, 0.0),
        };
        let (name, args) = body.split_once(':').unwrap_or((body, ""));
        let family = match name.trim().to_ascii_lowercase().as_str() {
            "gamma" if args.is_empty() => PriorFamily::Gamma { shape: [1.0; 4], rate: [1.0; 4] },
            "gamma" => {
                if let Some((sh, rt)) = args.split_once('/') {
                    PriorFamily::Gamma {
                        shape: spread(&parse_list(sh)?, "gamma shape")?,
                        rate: spread(&parse_list(rt)?, "gamma rate")?,
                    }
                } else {
                    let v = parse_list(args)?;
                    if v.len() != 2 {
                        return Err(Error::InvalidParameter(format!("gamma:A,B needs two values, got {args:?}")));
                    }
                    PriorFamily::Gamma { shape: [v[0]; 4], rate: [v[1]; 4] }
                }
            }
            "uniform-exp" | "uniform_exponential" => {
                let v = parse_list(args)?;
                if v.len() != 2 {
                    return Err(Error::InvalidParameter(format!("uniform-exp:C,P needs two values, got {args:?}")));
                }
                PriorFamily::UniformExponential { cutoff: v[0], mass: v[1] }
            }
            "point" => PriorFamily::PointMass { alpha: spread(&parse_list(args)?, "point mass")? },
            other => return Err(Error::InvalidParameter(format!("unknown prior family {other:?}"))),
        };
        Self::new(family, lower)
    }
}

impl fmt::Display for PriorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[f64; 4]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        match self.family {
            PriorFamily::Gamma { shape, rate } => write!(f, "gamma:{}/{}", join(&shape), join(&rate))?,
            PriorFamily::UniformExponential { cutoff, mass } => write!(f, "uniform-exp:{cutoff},{mass}")?,
            PriorFamily::PointMass { alpha } => write!(f, "point:{}", join(&alpha))?,
        }
        if self.lower > 0.0 {
            write!(f, "@{}", self.lower)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::stats::mean;
    use approx::assert_relative_eq;

    #[test]
    fn unit_gamma_log_density() {
        let p = PriorSpec::default();
        assert_relative_eq!(p.log_density(&[1.0; 4]), -4.0, epsilon = 1e-14);
        assert_relative_eq!(p.log_density(&[0.5, 1.0, 2.0, 3.0]), -6.5, epsilon = 1e-14);
    }

    #[test]
    fn uniform_exponential_is_continuous_and_normalized() {
        let p = PriorSpec::uniform_exponential(10.0, 0.9).unwrap();
        let left = p.log_density_coord(0, 10.0).0;
        let right = p.log_density_coord(0, 10.0 + 1e-12).0;
        assert_relative_eq!(left, right, epsilon = 1e-9);
        assert_eq!(p.log_density_coord(0, 10.0).1, 0.0);
        let tail = crate::quadrature::integrate(
            |a| p.log_density_coord(0, a).0.exp(),
            10.0,
            2000.0,
            Default::default(),
        )
        .unwrap();
        assert_relative_eq!(0.9 + tail.value, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn truncated_draws_respect_bound() {
        let p = PriorSpec::gamma_iid(1.0, 1.0).unwrap().truncated_below(0.5).unwrap();
        let mut rng = rng_from_seed(1);
        let draws: Vec<f64> = (0..20_000).map(|_| p.sample(&mut rng).unwrap()[2]).collect();
        assert!(draws.iter().all(|&a| a > 0.5));
        // memoryless: 0.5 + Exp(1)
        assert!((mean(&draws) - 1.5).abs() < 0.03);
        assert_eq!(p.log_density_coord(0, 0.4).0, f64::NEG_INFINITY);
    }

    #[test]
    fn uniform_exponential_draws_mass() {
        let p = PriorSpec::uniform_exponential(5.0, 0.8).unwrap();
        let mut rng = rng_from_seed(2);
        let below = (0..20_000).filter(|_| p.sample(&mut rng).unwrap()[0] <= 5.0).count();
        assert!((below as f64 / 20_000.0 - 0.8).abs() < 0.015);
    }

    #[test]
    fn parse_and_display_round_trip() {
        for text in ["gamma", "gamma:2,0.5", "gamma:1,1,2,2/1,1,1,1@0.5", "uniform-exp:100,0.99", "point:1,1,1,1"] {
            let p: PriorSpec = text.parse().unwrap();
            let again: PriorSpec = p.to_string().parse().unwrap();
            assert_eq!(p, again);
        }
        assert_eq!("gamma:1,1@0.5".parse::<PriorSpec>().unwrap().lower, 0.5);
        assert!("gamma:0,1".parse::<PriorSpec>().is_err());
        assert!("uniform-exp:1,1".parse::<PriorSpec>().is_err());
        assert!("normal:0,1".parse::<PriorSpec>().is_err());
    }

    #[test]
    fn json_shape() {
        let p = PriorSpec::gamma_iid(1.0, 1.0).unwrap();
        let v = serde_json::to_value(p).unwrap();
        assert_eq!(v["family"], "gamma");
        let back: PriorSpec =
            serde_json::from_str(r#"{"family":"uniform_exponential","cutoff":3,"mass":0.5}"#).unwrap();
        assert_eq!(back, PriorSpec::uniform_exponential(3.0, 0.5).unwrap());
    }
}
