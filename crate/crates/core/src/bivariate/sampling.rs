//! Random variates through the gamma representation: with Gᵢ ~ Gamma(αᵢ, 1),
//! X = (G₁+G₂)/ΣG and Y = (G₁+G₃)/ΣG.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::params::AlphaParams;
use super::sample::PairedSample;
use crate::rng::rng_from_seed;

/// log of a Gamma(shape, 1) variate.
///
/// Marsaglia–Tsang squeeze for shape ≥ 1; below one the shape is boosted by
/// one and corrected with U^(1/shape), added in log space so tiny shapes do
/// not underflow.
pub fn log_gamma_variate<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape < 1.0 {
        let u: f64 = rng.random::<f64>();
        // random::<f64>() is in [0, 1); reflect to (0, 1]
        return log_gamma_variate(shape + 1.0, rng) + (1.0 - u).ln() / shape;
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x: f64 = StandardNormal.sample(rng);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u: f64 = rng.random::<f64>();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d.ln() + v.ln();
        }
    }
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Maps a ratio onto the open unit interval; values that round to 0 or 1 are
/// moved to the nearest representable interior point.
pub(crate) fn open_unit(v: f64) -> f64 {
    const ONE_BELOW: f64 = 1.0 - f64::EPSILON / 2.0;
    if v >= 1.0 {
        ONE_BELOW
    } else if v > 0.0 {
        v
    } else {
        f64::MIN_POSITIVE
    }
}

/// One draw (x, y).
pub fn draw_pair<R: Rng + ?Sized>(alpha: &AlphaParams, rng: &mut R) -> (f64, f64) {
    let a = alpha.to_array();
    let l: [f64; 4] = std::array::from_fn(|i| log_gamma_variate(a[i], rng));
    let total = log_sum_exp(log_sum_exp(l[0], l[1]), log_sum_exp(l[2], l[3]));
    let x = (log_sum_exp(l[0], l[1]) - total).exp();
    let y = (log_sum_exp(l[0], l[2]) - total).exp();
    (open_unit(x), open_unit(y))
}

/// Draws `n` pairs with a generator seeded by `seed`.
pub fn sample_with<R: Rng + ?Sized>(alpha: &AlphaParams, n: usize, rng: &mut R) -> PairedSample {
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let (x, y) = draw_pair(alpha, rng);
        xs.push(x);
        ys.push(y);
    }
    PairedSample::new(xs, ys).expect("draws lie in the open unit square")
}

/// `n` independent pairs, deterministic in `seed`.
pub fn sample(alpha: &AlphaParams, n: usize, seed: u64) -> PairedSample {
    sample_with(alpha, n, &mut rng_from_seed(seed))
}
