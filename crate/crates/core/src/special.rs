//! Special functions and numerically stable elementary helpers.

use statrs::distribution::{ContinuousCDF, Normal};

pub use statrs::function::gamma::{digamma, ln_gamma};

/// log B(a) = Σ ln Γ(aᵢ) − ln Γ(Σ aᵢ).
pub fn ln_multivariate_beta(a: &[f64]) -> f64 {
    let s: f64 = a.iter().sum();
    a.iter().map(|&v| ln_gamma(v)).sum::<f64>() - ln_gamma(s)
}

/// log(1 + eˣ) without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// log σ(x).
#[inline]
pub fn log_sigmoid(x: f64) -> f64 {
    -softplus(-x)
}

fn std_normal() -> Normal {
    Normal::standard()
}

pub fn normal_cdf(z: f64) -> f64 {
    std_normal().cdf(z)
}

pub fn normal_quantile(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}
