//! Dead-latent auxiliary reconstruction.
//!
//! The residual of the main reconstruction is re-fit using only latents that
//! have not fired recently, giving them gradient signal to revive.

use crate::error::{Error, Result};
use crate::numerics::{topk_indices, DenseMatrix};
use crate::sae::{ForwardTrace, SaeConfig, SaeParams};

#[derive(Debug, Clone, PartialEq)]
pub struct AuxTrace {
    /// Row-major `B x m`; latents used by the auxiliary reconstruction.
    pub support: Vec<bool>,
    /// `B x m` post-ReLU activations restricted to `support`.
    pub latents: DenseMatrix,
    /// Auxiliary reconstruction of the residual (no decoder bias), `B x n`.
    pub recon: DenseMatrix,
    pub value: f64,
}

/// Returns `None` when no latent is dead or the aux budget is zero.
pub fn aux_reconstruction(
    params: &SaeParams,
    cfg: &SaeConfig,
    x: &DenseMatrix,
    trace: &ForwardTrace,
    dead_mask: &[bool],
) -> Result<Option<AuxTrace>> {
    let (b, m) = trace.preacts.shape();
    if dead_mask.len() != m {
        return Err(Error::shape("aux_loss", format!("dead mask of length {m}"), dead_mask.len()));
    }
    if x.shape() != trace.recon.shape() {
        return Err(Error::shape(
            "aux_loss",
            format!("{:?}", trace.recon.shape()),
            format!("{:?}", x.shape()),
        ));
    }
    let aux_k = cfg.resolved_aux_k(m);
    let dead: Vec<usize> = (0..m).filter(|&j| dead_mask[j]).collect();
    if dead.is_empty() || aux_k == 0 {
        return Ok(None);
    }

    let mut support = vec![false; b * m];
    let mut latents = DenseMatrix::zeros(b, m);
    let mut scratch = vec![0.0; dead.len()];
    for r in 0..b {
        let pre = trace.preacts.row(r);
        for (s, &j) in scratch.iter_mut().zip(&dead) {
            *s = pre[j];
        }
        for pick in topk_indices(&scratch, aux_k) {
            let j = dead[pick];
            if pre[j] > 0.0 {
                support[r * m + j] = true;
                latents[(r, j)] = pre[j];
            }
        }
    }
    let recon = latents.matmul(&params.w_dec.transpose())?;
    let mut value = 0.0;
    for r in 0..b {
        let (xr, hr, ar) = (x.row(r), trace.recon.row(r), recon.row(r));
        for i in 0..xr.len() {
            let e = xr[i] - hr[i] - ar[i];
            value += e * e;
        }
    }
    value /= b as f64;
    Ok(Some(AuxTrace {
        support,
        latents,
        recon,
        value,
    }))
}
