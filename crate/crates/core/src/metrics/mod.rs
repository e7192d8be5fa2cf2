//! Fidelity and atomicity metrics on trained dictionaries.

mod decompose;
mod fidelity;
mod geometry;
mod report;

pub use decompose::{decompose_feature, DecomposeOptions, Decomposition};
pub use fidelity::{explained_variance, kl_divergence, kl_divergence_score};
pub use geometry::{
    clustering_coefficient, ground_truth_mmcs, mean_cos_sim, nearest_cosines, unique_features, ClusteringPoint,
};
pub use report::{evaluate, nearest_cos_csv, reconstruct, EvalOptions, MetricReport, DEFAULT_THRESHOLDS, REPORT_HEADER};
