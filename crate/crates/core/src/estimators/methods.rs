use super::{EstimateReport, Method};
use crate::bivariate::moments::{mean_scale, solve_four_moments};
use crate::bivariate::{MomentSummary, PairedSample};
use crate::error::{Error, Result};
use crate::optimize::{minimize_with_restarts, NelderMeadOptions};
use crate::special::sigmoid;

/// Restarts used by the MM3/MM4 optimizers after the initial run.
const RESTARTS: usize = 5;

/// Sample means, unbiased variances and Pearson correlation.
pub fn empirical_moments(sample: &PairedSample) -> Result<MomentSummary> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::InvalidSample(format!("need at least 2 pairs, got {n}")));
    }
    let nf = n as f64;
    let m1 = sample.xs().iter().sum::<f64>() / nf;
    let m2 = sample.ys().iter().sum::<f64>() / nf;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in sample.pairs() {
        let (dx, dy) = (x - m1, y - m2);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    // constant columns leave only round-off in the centred sums
    let floor = |m: f64| nf * (4.0 * f64::EPSILON * m).powi(2);
    if sxx <= floor(m1) || syy <= floor(m2) {
        return Err(Error::ZeroVariance);
    }
    Ok(MomentSummary {
        m1,
        m2,
        v1: sxx / (nf - 1.0),
        v2: syy / (nf - 1.0),
        rho: (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0),
    })
}

/// MM1: the exact four-equation solution (ignoring v₂), truncated at zero.
pub fn mm1(m: &MomentSummary) -> Result<EstimateReport> {
    let out = solve_four_moments(m.m1, m.m2, m.v1, m.rho)?;
    Ok(EstimateReport::closed_form(Method::MM1, out.alpha))
}

/// MM2: the three-equation solution with α₄ chosen so that s_α + 1 is the
/// average of the two variance targets, truncated at zero.
pub fn mm2(m: &MomentSummary) -> Result<EstimateReport> {
    let target_x = m.m1 * (1.0 - m.m1) / m.v1;
    let target_y = m.m2 * (1.0 - m.m2) / m.v2;
    let s = 0.5 * (target_x + target_y) - 1.0;
    if !(s > 0.0) {
        return Err(Error::InfeasibleVariance {
            variance: m.v1.max(m.v2),
            bound: (m.m1 * (1.0 - m.m1)).max(m.m2 * (1.0 - m.m2)),
        });
    }
    let r = m.rho * mean_scale(m.m1, m.m2);
    let d = (1.0 - m.m1) * (1.0 - m.m2) + r;
    if d == 0.0 {
        return Err(Error::DegenerateDenominator(d));
    }
    let alpha4 = d * s;
    let raw = [
        alpha4 * (m.m1 * m.m2 + r) / d,
        alpha4 * (m.m1 * (1.0 - m.m2) - r) / d,
        alpha4 * (m.m2 * (1.0 - m.m1) - r) / d,
        alpha4,
    ];
    Ok(EstimateReport::closed_form(Method::MM2, raw))
}

fn check_for_optimizer(m: &MomentSummary) -> Result<()> {
    let ok = m.m1 > 0.0 && m.m1 < 1.0 && m.m2 > 0.0 && m.m2 < 1.0 && m.v1 > 0.0 && m.v2 > 0.0;
    if ok && (-1.0..=1.0).contains(&m.rho) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("moments out of domain: {m:?}")))
    }
}

/// Feasible range of f = α₃/(α₃+α₄) under the mean relations, shrunk by a
/// relative margin so that α₁, α₂ stay strictly positive.
fn mm3_fraction_range(m1: f64, m2: f64) -> (f64, f64) {
    let lo = ((m2 - m1) / (1.0 - m1)).max(0.0);
    let hi = (m2 / (1.0 - m1)).min(1.0);
    let margin = 1e-8 * (hi - lo);
    (lo + margin, hi - margin)
}

/// α from (total r = α₃+α₄, fraction f = α₃/r) through the mean relations.
fn mm3_alpha(m: &MomentSummary, r: f64, f: f64) -> [f64; 4] {
    let q = 1.0 - m.m1;
    [
        (m.m2 - q * f) * r / q,
        ((m.m1 - m.m2) + q * f) * r / q,
        f * r,
        (1.0 - f) * r,
    ]
}

/// Three-term MM3 objective as a function of (α₃, α₄).
pub fn mm3_objective(m: &MomentSummary, alpha3: f64, alpha4: f64) -> f64 {
    let s = (alpha3 + alpha4) / (1.0 - m.m1);
    let target_x = m.m1 * (1.0 - m.m1) / m.v1;
    let target_y = m.m2 * (1.0 - m.m2) / m.v2;
    let e = m.m2 - m.rho * mean_scale(m.m1, m.m2) / (1.0 - m.m1);
    (s + 1.0 - target_x).powi(2) + (s + 1.0 - target_y).powi(2) + ((e - 1.0) * alpha3 + e * alpha4).powi(2)
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// MM3: α₁, α₂ from the mean relations (so both means are matched exactly),
/// (α₃, α₄) from minimizing the variance and correlation deviations.
pub fn mm3(m: &MomentSummary) -> Result<EstimateReport> {
    check_for_optimizer(m)?;
    let (lo, hi) = mm3_fraction_range(m.m1, m.m2);
    let width = hi - lo;
    let decode = |theta: &[f64]| -> (f64, f64) {
        let r = theta[0].exp();
        let f = lo + width * sigmoid(theta[1].clamp(-700.0, 700.0));
        (r, f)
    };
    let objective = |theta: &[f64]| {
        let (r, f) = decode(theta);
        mm3_objective(m, f * r, (1.0 - f) * r)
    };

    let target = 0.5 * (m.m1 * (1.0 - m.m1) / m.v1 + m.m2 * (1.0 - m.m2) / m.v2) - 1.0;
    let r0 = if target > 0.0 { target * (1.0 - m.m1) } else { 1.0 };
    let e = m.m2 - m.rho * mean_scale(m.m1, m.m2) / (1.0 - m.m1);
    let f0 = ((e - lo) / width).clamp(0.05, 0.95);
    let opts = NelderMeadOptions::default();
    let best = minimize_with_restarts(objective, &[r0.ln(), logit(f0)], RESTARTS, &opts);
    if !best.value.is_finite() {
        return Err(Error::OptimizerFailure("MM3 objective is not finite at any explored point".into()));
    }
    let (r, f) = decode(&best.x);
    let mut report = EstimateReport::closed_form(Method::MM3, mm3_alpha(m, r, f));
    report.converged = best.converged;
    report.objective = Some(best.value);
    Ok(report)
}

/// Upper bound on s_α used by MM4.
fn mm4_sum_bound(m: &MomentSummary) -> f64 {
    (m.m1 * (1.0 - m.m1) / m.v1).max(m.m2 * (1.0 - m.m2) / m.v2) - 1.0
}

/// Five-term squared deviation between the empirical and implied moments.
pub fn mm4_objective(m: &MomentSummary, a: &[f64; 4]) -> f64 {
    let [a1, a2, a3, a4] = *a;
    let s = a1 + a2 + a3 + a4;
    let (xa, xb, ya, yb) = (a1 + a2, a3 + a4, a1 + a3, a2 + a4);
    let denom = s * s * (s + 1.0);
    (m.m1 - xa / s).powi(2)
        + (m.m2 - ya / s).powi(2)
        + (m.rho - (a1 * a4 - a2 * a3) / (xa * ya * yb * xb).sqrt()).powi(2)
        + (m.v1 - xa * xb / denom).powi(2)
        + (m.v2 - ya * yb / denom).powi(2)
}

/// MM4: least squares over all five moments subject to α > 0 and the bound
/// s_α ≤ max(X̄(1−X̄)/S²_X, Ȳ(1−Ȳ)/S²_Y) − 1.
///
/// The search runs over s_α = bound·σ(ψ) and softmax weights, so every
/// iterate satisfies both constraints.
pub fn mm4(m: &MomentSummary) -> Result<EstimateReport> {
    check_for_optimizer(m)?;
    let bound = mm4_sum_bound(m);
    if !(bound > 0.0) {
        return Err(Error::InfeasibleVariance {
            variance: m.v1.min(m.v2),
            bound: (m.m1 * (1.0 - m.m1)).min(m.m2 * (1.0 - m.m2)),
        });
    }
    let decode = |theta: &[f64]| -> [f64; 4] {
        let s = bound * sigmoid(theta[0]);
        let logits = [theta[1], theta[2], theta[3], 0.0];
        let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w = logits.map(|l| (l - top).exp());
        let total: f64 = w.iter().sum();
        w.map(|v| s * v / total)
    };
    let objective = |theta: &[f64]| mm4_objective(m, &decode(theta));

    let mut start = match solve_four_moments(m.m1, m.m2, m.v1, m.rho) {
        Ok(out) => out.alpha.map(|a| if a > 0.0 { a } else { 1e-2 }),
        Err(_) => [1.0; 4],
    };
    let s0: f64 = start.iter().sum();
    if s0 >= bound {
        let scale = 0.9 * bound / s0;
        start = start.map(|a| a * scale);
    }
    let s0: f64 = start.iter().sum();
    let theta0 = [
        logit(s0 / bound),
        (start[0] / start[3]).ln(),
        (start[1] / start[3]).ln(),
        (start[2] / start[3]).ln(),
    ];
    let opts = NelderMeadOptions {
        f_abs: 1e-24,
        ..NelderMeadOptions::default()
    };
    let best = minimize_with_restarts(objective, &theta0, RESTARTS, &opts);
    if !best.value.is_finite() {
        return Err(Error::OptimizerFailure("MM4 objective is not finite at any explored point".into()));
    }
    let alpha = decode(&best.x);
    if alpha.iter().any(|&a| !(a > 0.0)) {
        return Err(Error::OptimizerFailure(format!("MM4 left the positive orthant: {alpha:?}")));
    }
    let mut report = EstimateReport::closed_form(Method::MM4, alpha);
    report.converged = best.converged;
    report.objective = Some(best.value);
    Ok(report)
}

/// Dispatches one of the moment methods.
pub fn estimate(method: Method, m: &MomentSummary) -> Result<EstimateReport> {
    match method {
        Method::MM1 => mm1(m),
        Method::MM2 => mm2(m),
        Method::MM3 => mm3(m),
        Method::MM4 => mm4(m),
        Method::BE1 | Method::BE2 => Err(Error::InvalidParameter(format!(
            "{method} needs posterior draws, not moments"
        ))),
    }
}

pub fn estimate_sample(method: Method, sample: &PairedSample) -> Result<EstimateReport> {
    estimate(method, &empirical_moments(sample)?)
}
