//! Latent-variable augmented posterior on an unconstrained space.
//!
//! Each pair (xᵢ, yᵢ) gets its latent uᵢ ∈ Ωᵢ = (Lᵢ, Uᵢ) back, so the
//! likelihood becomes a product of Dirichlet densities. Sampling happens in
//! q = (θ, w) with αₖ = lower + e^θₖ and uᵢ = Lᵢ + (Uᵢ − Lᵢ)·σ(wᵢ).

use super::nuts::LogDensity;
use super::prior::PriorSpec;
use crate::bivariate::PairedSample;
use crate::error::{Error, Result};
use crate::special::{digamma, ln_multivariate_beta, log_sigmoid, sigmoid};

/// A point in the sampling space.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedState {
    pub theta: [f64; 4],
    pub w: Vec<f64>,
}

impl AugmentedState {
    pub fn from_flat(q: &[f64]) -> Self {
        Self { theta: [q[0], q[1], q[2], q[3]], w: q[4..].to_vec() }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.theta.iter().copied().chain(self.w.iter().copied()).collect()
    }
}

/// Where each of the four Dirichlet coordinates sits relative to Ωᵢ: the
/// coordinate equals `offset + gap` with the gap measured from the left end
/// (grows with w) or from the right end (shrinks with w).
#[derive(Debug, Clone, Copy)]
struct Datum {
    lower: f64,
    width: f64,
    log_width: f64,
    // offsets of u, x−u, y−u, 1−x−y+u
    offsets: [f64; 4],
}

const GROWS_WITH_W: [bool; 4] = [true, false, false, true];

impl Datum {
    fn new(x: f64, y: f64) -> Self {
        let lower = (x + y - 1.0).max(0.0);
        let upper = x.min(y);
        let width = upper - lower;
        let fourth = if lower > 0.0 { 0.0 } else { 1.0 - x - y };
        Self {
            lower,
            width,
            log_width: width.ln(),
            offsets: [lower, x - upper, y - upper, fourth],
        }
    }
}

/// Log density of the augmented posterior for one data set and prior.
#[derive(Debug, Clone)]
pub struct AugmentedPosterior {
    data: Vec<Datum>,
    prior: PriorSpec,
    log_jacobian_const: f64,
}

impl AugmentedPosterior {
    pub fn new(sample: &PairedSample, prior: PriorSpec) -> Result<Self> {
        prior.validate()?;
        if !prior.has_density() {
            return Err(Error::InvalidParameter("a point-mass prior has no density to sample".into()));
        }
        if sample.is_empty() {
            return Err(Error::InvalidSample("no data".into()));
        }
        let data: Vec<Datum> = sample.pairs().map(|(x, y)| Datum::new(x, y)).collect();
        if data.iter().any(|d| !(d.width > 0.0)) {
            return Err(Error::InvalidSample("a pair has an empty latent interval".into()));
        }
        let log_jacobian_const = data.iter().map(|d| d.log_width).sum();
        Ok(Self { data, prior, log_jacobian_const })
    }

    pub fn n(&self) -> usize {
        self.data.len()
    }

    pub fn prior(&self) -> &PriorSpec {
        &self.prior
    }

    pub fn alpha(&self, theta: &[f64]) -> [f64; 4] {
        std::array::from_fn(|k| self.prior.lower + theta[k].exp())
    }

    pub fn theta(&self, alpha: &[f64; 4]) -> [f64; 4] {
        std::array::from_fn(|k| (alpha[k] - self.prior.lower).ln())
    }

    pub fn latent(&self, w: &[f64]) -> Vec<f64> {
        self.data.iter().zip(w).map(|(d, &wi)| d.lower + d.width * sigmoid(wi)).collect()
    }

    /// Inverse of [`latent`](Self::latent).
    pub fn w_of(&self, u: &[f64]) -> Vec<f64> {
        self.data
            .iter()
            .zip(u)
            .map(|(d, &ui)| {
                let t = (ui - d.lower) / d.width;
                (t / (1.0 - t)).ln()
            })
            .collect()
    }

    /// Density in (α, u) without Jacobian terms.
    pub fn log_density_untransformed(&self, alpha: &[f64; 4], u: &[f64]) -> f64 {
        let mut acc = -(self.n() as f64) * ln_multivariate_beta(alpha) + self.prior.log_density(alpha);
        for (d, &ui) in self.data.iter().zip(u) {
            let factors = [
                ui,
                d.offsets[1] + (d.lower + d.width - ui),
                d.offsets[2] + (d.lower + d.width - ui),
                d.offsets[3] + (ui - d.lower),
            ];
            for k in 0..4 {
                acc += (alpha[k] - 1.0) * factors[k].ln();
            }
        }
        acc
    }

    /// log density in q = (θ, w), Jacobians included; the gradient is written
    /// into `grad`.
    pub fn log_density_and_gradient(&self, q: &[f64], grad: &mut [f64]) -> f64 {
        let n = self.n();
        debug_assert_eq!(q.len(), 4 + n);
        let theta = &q[..4];
        let w = &q[4..];
        let alpha = self.alpha(theta);
        let s: f64 = alpha.iter().sum();
        let psi_s = digamma(s);

        let mut value = -(n as f64) * ln_multivariate_beta(&alpha) + self.log_jacobian_const;
        let mut sum_log = [0.0; 4];
        for (i, (d, &wi)) in self.data.iter().zip(w).enumerate() {
            let ls = log_sigmoid(wi);
            let lsn = log_sigmoid(-wi);
            let sp = ls.exp();
            let sn = lsn.exp();
            // derivative of either gap with respect to w, up to sign
            let dgap = d.width * sp * sn;
            let mut dw = sn - sp;
            value += ls + lsn;
            for k in 0..4 {
                let (log_gap, gap) = if GROWS_WITH_W[k] {
                    (d.log_width + ls, d.width * sp)
                } else {
                    (d.log_width + lsn, d.width * sn)
                };
                let o = d.offsets[k];
                let (log_factor, factor) = if o == 0.0 { (log_gap, gap) } else { ((o + gap).ln(), o + gap) };
                sum_log[k] += log_factor;
                let e = alpha[k] - 1.0;
                if e != 0.0 {
                    // ∂ log(o + gap)/∂w; the o = 0 case is written without the division
                    let dlog = if o == 0.0 {
                        if GROWS_WITH_W[k] { sn } else { -sp }
                    } else {
                        let g = dgap / factor;
                        if GROWS_WITH_W[k] { g } else { -g }
                    };
                    dw += e * dlog;
                }
            }
            grad[4 + i] = dw;
        }
        for k in 0..4 {
            let e = alpha[k] - 1.0;
            if e != 0.0 {
                value += e * sum_log[k];
            }
            let (lp, dlp) = self.prior.log_density_coord(k, alpha[k]);
            value += lp + theta[k];
            let d_alpha = sum_log[k] - (n as f64) * (digamma(alpha[k]) - psi_s) + dlp;
            grad[k] = d_alpha * theta[k].exp() + 1.0;
        }
        if !value.is_finite() {
            grad.iter_mut().for_each(|g| *g = 0.0);
            return f64::NEG_INFINITY;
        }
        value
    }

    pub fn log_density(&self, q: &[f64]) -> f64 {
        let mut grad = vec![0.0; q.len()];
        self.log_density_and_gradient(q, &mut grad)
    }

    /// log |∂(α, u)/∂(θ, w)| at `q`.
    pub fn log_jacobian(&self, q: &[f64]) -> f64 {
        let theta_part: f64 = q[..4].iter().sum();
        let w_part: f64 = q[4..].iter().map(|&w| log_sigmoid(w) + log_sigmoid(-w)).sum();
        theta_part + w_part + self.log_jacobian_const
    }
}

impl LogDensity for AugmentedPosterior {
    fn dim(&self) -> usize {
        4 + self.n()
    }

    fn log_density_gradient(&self, q: &[f64], grad: &mut [f64]) -> f64 {
        self.log_density_and_gradient(q, grad)
    }
}

/// Log density and gradient at `state` for `data` under `prior`.
pub fn log_augmented_posterior(
    state: &AugmentedState,
    data: &PairedSample,
    prior: PriorSpec,
) -> Result<(f64, Vec<f64>)> {
    let post = AugmentedPosterior::new(data, prior)?;
    if state.w.len() != post.n() {
        return Err(Error::InvalidParameter(format!(
            "state has {} latent coordinates for {} pairs",
            state.w.len(),
            post.n()
        )));
    }
    let q = state.to_flat();
    let mut grad = vec![0.0; q.len()];
    let value = post.log_density_and_gradient(&q, &mut grad);
    Ok((value, grad))
}
