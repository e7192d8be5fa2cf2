//! Composition rate: how well a small BatchTopK SAE trained on a dictionary's
//! own decoder columns reconstructs them. Lower means more atomic features.

use crate::error::{Error, Result};
use crate::metrics::{explained_variance, reconstruct};
use crate::numerics::{norm, streams, DenseMatrix, RngStream};
use crate::sae::SaeConfig;
use crate::trainer::{train, Checkpoint, MatrixSource, TrainConfig};

/// Active meta-latents per column.
pub const META_K: usize = 4;

/// Meta-training schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaBudget {
    pub total_steps: u64,
    pub learning_rate: f64,
    pub alpha: f64,
    pub max_batch: usize,
}

impl Default for MetaBudget {
    fn default() -> Self {
        Self {
            total_steps: 2000,
            learning_rate: 2e-4,
            alpha: 1.0 / 32.0,
            max_batch: 256,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MetaOutcome {
    pub rate: f64,
    pub checkpoint: Checkpoint,
}

/// Unit-normalized decoder columns as rows, sorted lexicographically so the
/// result does not depend on the primary's latent order.
pub fn canonical_rows(w_dec: &DenseMatrix) -> DenseMatrix {
    let mut rows: Vec<Vec<f64>> = (0..w_dec.cols())
        .map(|j| {
            let c = w_dec.column(j);
            let len = norm(&c);
            if len > 0.0 {
                c.iter().map(|v| v / len).collect()
            } else {
                c
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    DenseMatrix::from_rows(&rows).expect("equal-length rows")
}

pub fn composition_rate(w_dec: &DenseMatrix, seed: u64) -> Result<f64> {
    Ok(composition_rate_with(w_dec, seed, &MetaBudget::default())?.rate)
}

pub fn composition_rate_with(w_dec: &DenseMatrix, seed: u64, budget: &MetaBudget) -> Result<MetaOutcome> {
    let m = w_dec.cols();
    let meta_m = m / 4;
    if meta_m < 2 {
        return Err(Error::config("m", format!("{m} primary latents give fewer than 2 meta-latents")));
    }
    let data = canonical_rows(w_dec);
    let batch = m.min(budget.max_batch);
    let sae = SaeConfig {
        alpha: budget.alpha,
        ..SaeConfig::batch_topk(META_K)
    };
    let cfg = TrainConfig {
        learning_rate: budget.learning_rate,
        batch_size: batch,
        total_steps: budget.total_steps,
        seed,
        log_every: budget.total_steps.max(1),
        ..TrainConfig::default()
    };
    let mut source = MatrixSource::new(data.clone(), RngStream::derive(seed, streams::DATA))?;
    let outcome = train(&mut source, meta_m, &sae, &cfg)?;
    let (recon, _) = reconstruct(&outcome.params, &sae, &data, batch)?;
    Ok(MetaOutcome {
        rate: explained_variance(&data, &recon)?,
        checkpoint: outcome.checkpoint,
    })
}
