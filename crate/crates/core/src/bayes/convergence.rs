//! Split-R̂ and bulk effective sample size on rank-normalized draws.

use crate::special::normal_quantile;

/// Halves each chain (dropping the middle draw of odd-length chains).
fn split(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * chains.len());
    for c in chains {
        let half = c.len() / 2;
        out.push(c[..half].to_vec());
        out.push(c[c.len() - half..].to_vec());
    }
    out
}

/// Replaces every draw by Φ⁻¹((r − 3/8)/(S + 1/4)) of its pooled rank r,
/// averaging ranks over ties.
fn rank_normalize(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut pooled: Vec<(f64, usize, usize)> = Vec::new();
    for (c, chain) in chains.iter().enumerate() {
        for (i, &v) in chain.iter().enumerate() {
            pooled.push((v, c, i));
        }
    }
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));
    let s = pooled.len() as f64;
    let mut out: Vec<Vec<f64>> = chains.iter().map(|c| vec![0.0; c.len()]).collect();
    let mut start = 0;
    while start < pooled.len() {
        let mut end = start + 1;
        while end < pooled.len() && pooled[end].0 == pooled[start].0 {
            end += 1;
        }
        let rank = 0.5 * ((start + 1) + end) as f64;
        let z = normal_quantile((rank - 0.375) / (s + 0.25));
        for &(_, c, i) in &pooled[start..end] {
            out[c][i] = z;
        }
        start = end;
    }
    out
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_var(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Classic R̂ on equal-length chains.
fn rhat_basic(chains: &[Vec<f64>]) -> f64 {
    let n = chains[0].len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let w = mean(&chains.iter().map(|c| sample_var(c)).collect::<Vec<_>>());
    let b = n * sample_var(&means);
    if w == 0.0 {
        return if b == 0.0 { 1.0 } else { f64::INFINITY };
    }
    (((n - 1.0) / n * w + b / n) / w).sqrt()
}

/// max of the rank-normalized split-R̂ of the draws and of their distance to
/// the median. `chains` must have equal lengths of at least 4.
pub fn split_rhat(chains: &[Vec<f64>]) -> f64 {
    let sp = split(chains);
    let bulk = rhat_basic(&rank_normalize(&sp));
    let mut all: Vec<f64> = chains.iter().flatten().copied().collect();
    all.sort_by(f64::total_cmp);
    let med = crate::stats::quantile_sorted(&all, 0.5);
    let folded: Vec<Vec<f64>> = sp.iter().map(|c| c.iter().map(|x| (x - med).abs()).collect()).collect();
    let tail = rhat_basic(&rank_normalize(&folded));
    bulk.max(tail)
}

/// Autocovariance at `lag` with divisor n.
fn autocov(xs: &[f64], m: f64, lag: usize) -> f64 {
    let n = xs.len();
    (0..n - lag).map(|i| (xs[i] - m) * (xs[i + lag] - m)).sum::<f64>() / n as f64
}

/// ESS with Geyer's initial monotone positive sequence, combining chains.
pub fn ess_basic(chains: &[Vec<f64>]) -> f64 {
    let m = chains.len();
    let n = chains[0].len();
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let acov = |lag: usize| mean(&chains.iter().zip(&means).map(|(c, &mu)| autocov(c, mu, lag)).collect::<Vec<_>>());
    let acov0 = acov(0);
    let nf = n as f64;
    let mean_var = acov0 * nf / (nf - 1.0);
    let mut var_plus = mean_var * (nf - 1.0) / nf;
    if m > 1 {
        var_plus += sample_var(&means);
    }
    let total = (m * n) as f64;
    if !(var_plus > 0.0) {
        return total;
    }
    let rho_at = |lag: usize| 1.0 - (mean_var - acov(lag)) / var_plus;
    let mut rho = vec![0.0; n + 1];
    rho[0] = 1.0;
    let mut even = 1.0;
    let mut odd = rho_at(1);
    rho[1] = odd;
    let mut t = 1;
    while t + 4 < n && even + odd > 0.0 {
        even = rho_at(t + 1);
        odd = rho_at(t + 2);
        if even + odd >= 0.0 {
            rho[t + 1] = even;
            rho[t + 2] = odd;
        }
        t += 2;
    }
    let max_t = t;
    if even > 0.0 {
        rho[max_t + 1] = even;
    }
    let mut t = 1;
    while t + 2 <= max_t {
        if rho[t + 1] + rho[t + 2] > rho[t - 1] + rho[t] {
            let avg = 0.5 * (rho[t - 1] + rho[t]);
            rho[t + 1] = avg;
            rho[t + 2] = avg;
        }
        t += 2;
    }
    let tau = (-1.0 + 2.0 * rho[..=max_t].iter().sum::<f64>() + rho[max_t + 1]).max(1.0 / total.log10());
    total / tau
}

/// Bulk ESS: [`ess_basic`] of the rank-normalized split chains, capped at
/// the number of draws.
pub fn bulk_ess(chains: &[Vec<f64>]) -> f64 {
    let total = chains.iter().map(Vec::len).sum::<usize>() as f64;
    ess_basic(&rank_normalize(&split(chains))).min(total)
}
