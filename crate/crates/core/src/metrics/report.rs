use serde::{Deserialize, Serialize};

use super::{clustering_coefficient, explained_variance, ground_truth_mmcs, mean_cos_sim, unique_features, ClusteringPoint};
use crate::datagen::SyntheticWorld;
use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;
use crate::sae::{forward, SaeConfig, SaeParams};

/// Similarity thresholds swept for the clustering curve by default.
pub const DEFAULT_THRESHOLDS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

pub const REPORT_HEADER: &str = "explained_variance,mean_cos_sim,unique_fraction,ground_truth_mmcs,actual_l0";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub explained_variance: f64,
    pub mean_cos_sim: f64,
    pub clustering: Vec<ClusteringPoint>,
    /// Present when a reference dictionary was supplied.
    pub unique_fraction: Option<f64>,
    /// Present when the ground-truth world was supplied.
    pub ground_truth_mmcs: Option<f64>,
    pub actual_l0: f64,
}

#[derive(Debug, Clone)]
pub struct EvalOptions<'a> {
    pub thresholds: Vec<f64>,
    /// Rows per forward pass; matters for BatchTopK, whose budget is per batch.
    pub batch_size: usize,
    pub reference: Option<&'a DenseMatrix>,
    pub unique_threshold: f64,
    pub world: Option<&'a SyntheticWorld>,
}

impl Default for EvalOptions<'_> {
    fn default() -> Self {
        Self {
            thresholds: DEFAULT_THRESHOLDS.to_vec(),
            batch_size: 256,
            reference: None,
            unique_threshold: 0.2,
            world: None,
        }
    }
}

/// Reconstructs `x` in consecutive batches; returns the reconstruction and the mean L0.
pub fn reconstruct(params: &SaeParams, cfg: &SaeConfig, x: &DenseMatrix, batch_size: usize) -> Result<(DenseMatrix, f64)> {
    if batch_size == 0 {
        return Err(Error::config("batch_size", "must be at least 1"));
    }
    let mut out = DenseMatrix::zeros(x.rows(), x.cols());
    let mut active = 0usize;
    let mut start = 0;
    while start < x.rows() {
        let end = (start + batch_size).min(x.rows());
        let rows: Vec<&[f64]> = (start..end).map(|r| x.row(r)).collect();
        let chunk = DenseMatrix::from_rows(&rows)?;
        let trace = forward(params, cfg, &chunk)?;
        active += trace.active_count();
        for (i, r) in (start..end).enumerate() {
            out.row_mut(r).copy_from_slice(trace.recon.row(i));
        }
        start = end;
    }
    Ok((out, active as f64 / x.rows().max(1) as f64))
}

pub fn evaluate(params: &SaeParams, cfg: &SaeConfig, x: &DenseMatrix, opts: &EvalOptions) -> Result<MetricReport> {
    let (x_hat, actual_l0) = reconstruct(params, cfg, x, opts.batch_size)?;
    let w = &params.w_dec;
    Ok(MetricReport {
        explained_variance: explained_variance(x, &x_hat)?,
        mean_cos_sim: mean_cos_sim(w, cfg.delta)?,
        clustering: clustering_coefficient(w, &opts.thresholds, cfg.delta)?,
        unique_fraction: opts
            .reference
            .map(|r| unique_features(w, r, opts.unique_threshold, cfg.delta))
            .transpose()?,
        ground_truth_mmcs: opts.world.map(|g| ground_truth_mmcs(g, w, cfg.delta)).transpose()?,
        actual_l0,
    })
}

fn cell(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

impl MetricReport {
    /// One header line and one value line; absent metrics are empty cells.
    pub fn summary_csv(&self) -> String {
        format!(
            "{REPORT_HEADER}\n{},{},{},{},{}\n",
            self.explained_variance,
            self.mean_cos_sim,
            cell(self.unique_fraction),
            cell(self.ground_truth_mmcs),
            self.actual_l0
        )
    }

    pub fn clustering_csv(&self) -> String {
        let mut s = String::from("threshold,density,coefficient\n");
        for p in &self.clustering {
            s.push_str(&format!("{},{},{}\n", p.threshold, p.density, p.coefficient));
        }
        s
    }
}

/// `feature_id,max_cos` lines for a nearest-cosine dump.
pub fn nearest_cos_csv(values: &[f64]) -> String {
    let mut s = String::from("feature_id,max_cos\n");
    for (i, v) in values.iter().enumerate() {
        s.push_str(&format!("{i},{v}\n"));
    }
    s
}
