//! Bias / MSE / MAPE / coverage tables.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimators::Method;
use crate::stats::pairwise_sum;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub method: Method,
    /// `alpha1`..`alpha4` or one of `m1, m2, v1, v2, rho`.
    pub target: String,
    pub truth: f64,
    pub bias: f64,
    pub mse: f64,
    pub mape: f64,
    /// Fraction of intervals containing the truth, when intervals exist.
    pub coverage: Option<f64>,
    pub replications: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub n: usize,
    pub reps: usize,
    pub rows: Vec<MetricRow>,
}

impl MetricsTable {
    pub fn row(&self, method: Method, target: &str) -> Option<&MetricRow> {
        self.rows.iter().find(|r| r.method == method && r.target == target)
    }

    /// CSV with header `method,target,truth,bias,mse,mape,coverage,replications,failed`;
    /// a missing coverage is an empty cell.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "method,target,truth,bias,mse,mape,coverage,replications,failed")?;
        for r in &self.rows {
            let cov = r.coverage.map(|c| c.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.method, r.target, r.truth, r.bias, r.mse, r.mape, cov, r.replications, r.failed
            )?;
        }
        Ok(())
    }
}

/// Per-replication outcome of one method on one target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub estimate: f64,
    pub covered: Option<bool>,
}

/// Aggregates the successful outcomes of one method/target cell. Sums run in
/// replication order, so the result does not depend on scheduling.
pub fn aggregate(method: Method, target: &str, truth: f64, outcomes: &[Option<Outcome>]) -> MetricRow {
    let ok: Vec<&Outcome> = outcomes.iter().flatten().collect();
    let k = ok.len() as f64;
    let err: Vec<f64> = ok.iter().map(|o| o.estimate - truth).collect();
    let sq: Vec<f64> = err.iter().map(|e| e * e).collect();
    let ape: Vec<f64> = err.iter().map(|e| e.abs() / truth.abs()).collect();
    let hits: Vec<bool> = ok.iter().filter_map(|o| o.covered).collect();
    let coverage = (!hits.is_empty()).then(|| hits.iter().filter(|&&h| h).count() as f64 / hits.len() as f64);
    MetricRow {
        method,
        target: target.to_string(),
        truth,
        bias: pairwise_sum(&err) / k,
        mse: pairwise_sum(&sq) / k,
        mape: pairwise_sum(&ape) / k,
        coverage,
        replications: ok.len(),
        failed: outcomes.len() - ok.len(),
    }
}
