//! Logit-normal pairs: (X, Y) = (σ(G₁), σ(G₂)) with G bivariate normal.

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Mutex, OnceLock};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bivariate::sampling::open_unit;
use crate::bivariate::{MomentSummary, PairedSample};
use crate::error::{Error, Result};
use crate::par::{map_indexed, Exec};
use crate::rng::{child_rng, rng_from_seed};
use crate::special::sigmoid;
use crate::stats::pairwise_sum;

/// Draws behind the true-moment oracle.
pub const ORACLE_DRAWS: usize = 10_000_000;
/// Stream used by the oracle, fixed so cached values are reproducible.
pub const ORACLE_SEED: u64 = 0x5eed_0f_0a_c1e;
const ORACLE_CHUNK: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogitNormal {
    pub mu: [f64; 2],
    pub sigma: [[f64; 2]; 2],
}

impl LogitNormal {
    pub fn new(mu: [f64; 2], sigma: [[f64; 2]; 2]) -> Result<Self> {
        let g = Self { mu, sigma };
        g.cholesky()?;
        Ok(g)
    }

    /// G with zero means, unit variances and correlation 0.1.
    pub fn experiment1() -> Self {
        Self { mu: [0.0, 0.0], sigma: [[1.0, 0.1], [0.1, 1.0]] }
    }

    /// G with means −1, variances 2.25 and 1, covariance −1.2.
    pub fn experiment2() -> Self {
        Self { mu: [-1.0, -1.0], sigma: [[2.25, -1.2], [-1.2, 1.0]] }
    }

    /// Lower-triangular factor (l11, l21, l22).
    pub fn cholesky(&self) -> Result<(f64, f64, f64)> {
        let s = self.sigma;
        let finite = self.mu.iter().chain(s.iter().flatten()).all(|v| v.is_finite());
        if !finite || s[0][1] != s[1][0] || !(s[0][0] > 0.0) {
            return Err(Error::CholeskyFailure);
        }
        let l11 = s[0][0].sqrt();
        let l21 = s[1][0] / l11;
        let rest = s[1][1] - l21 * l21;
        if !(rest > 0.0) {
            return Err(Error::CholeskyFailure);
        }
        Ok((l11, l21, rest.sqrt()))
    }

    pub fn draw_with<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<PairedSample> {
        let (l11, l21, l22) = self.cholesky()?;
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for _ in 0..n {
            let z1: f64 = StandardNormal.sample(rng);
            let z2: f64 = StandardNormal.sample(rng);
            xs.push(open_unit(sigmoid(self.mu[0] + l11 * z1)));
            ys.push(open_unit(sigmoid(self.mu[1] + l21 * z1 + l22 * z2)));
        }
        PairedSample::new(xs, ys)
    }

    fn key(&self, draws: usize) -> String {
        let bits: Vec<String> = self
            .mu
            .iter()
            .chain(self.sigma.iter().flatten())
            .map(|v| format!("{:016x}", v.to_bits()))
            .collect();
        format!("{}:{draws}:{ORACLE_SEED:x}", bits.join(":"))
    }
}

/// `n` logit-normal pairs from stream `seed`.
pub fn sample_logit_normal(mu: [f64; 2], sigma: [[f64; 2]; 2], n: usize, seed: u64) -> Result<PairedSample> {
    LogitNormal::new(mu, sigma)?.draw_with(n, &mut rng_from_seed(seed))
}

fn moments_by_simulation(g: &LogitNormal, draws: usize, exec: Exec) -> Result<MomentSummary> {
    let (l11, l21, l22) = g.cholesky()?;
    let chunks = draws.div_ceil(ORACLE_CHUNK);
    // per chunk: Σx, Σy, Σx², Σy², Σxy, count
    let partial = map_indexed(exec, chunks, |c| {
        let mut rng = child_rng(ORACLE_SEED, c as u64);
        let m = ORACLE_CHUNK.min(draws - c * ORACLE_CHUNK);
        let mut acc = [0.0; 6];
        for _ in 0..m {
            let z1: f64 = StandardNormal.sample(&mut rng);
            let z2: f64 = StandardNormal.sample(&mut rng);
            let x = sigmoid(g.mu[0] + l11 * z1);
            let y = sigmoid(g.mu[1] + l21 * z1 + l22 * z2);
            acc[0] += x;
            acc[1] += y;
            acc[2] += x * x;
            acc[3] += y * y;
            acc[4] += x * y;
        }
        acc[5] = m as f64;
        acc
    });
    let total = |j: usize| pairwise_sum(&partial.iter().map(|a| a[j]).collect::<Vec<_>>());
    let n = total(5);
    let (mx, my) = (total(0) / n, total(1) / n);
    let vx = total(2) / n - mx * mx;
    let vy = total(3) / n - my * my;
    let cxy = total(4) / n - mx * my;
    Ok(MomentSummary { m1: mx, m2: my, v1: vx, v2: vy, rho: cxy / (vx * vy).sqrt() })
}

fn memory_cache() -> &'static Mutex<HashMap<String, MomentSummary>> {
    static CACHE: OnceLock<Mutex<HashMap<String, MomentSummary>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn read_disk_cache(path: &Path) -> HashMap<String, MomentSummary> {
    std::fs::read_to_string(path)
        .ok()
        .and_then(|text| serde_json::from_str(&text).ok())
        .unwrap_or_default()
}

/// Monte Carlo moments of the generator from `draws` simulated pairs.
/// Results are memoized per process and, when `disk_cache` is given, in a
/// JSON file keyed by the generator parameters.
pub fn true_moments(g: &LogitNormal, draws: usize, disk_cache: Option<&Path>, exec: Exec) -> Result<MomentSummary> {
    let key = g.key(draws);
    if let Some(m) = memory_cache().lock().expect("cache lock").get(&key) {
        return Ok(*m);
    }
    if let Some(path) = disk_cache {
        if let Some(m) = read_disk_cache(path).get(&key) {
            memory_cache().lock().expect("cache lock").insert(key, *m);
            return Ok(*m);
        }
    }
    let m = moments_by_simulation(g, draws, exec)?;
    memory_cache().lock().expect("cache lock").insert(key.clone(), m);
    if let Some(path) = disk_cache {
        let mut all = read_disk_cache(path);
        all.insert(key, m);
        let text = serde_json::to_string_pretty(&all).map_err(|e| Error::Io(e.to_string()))?;
        std::fs::write(path, text)?;
    }
    Ok(m)
}
