use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::numerics::{dot, DenseMatrix};
use crate::sae::loss::LossOutput;
use crate::sae::ortho::accumulate_gradient;
use crate::sae::{ForwardTrace, Gradients, Mode, SaeConfig, SaeParams};

/// Exact gradient of `LossOutput::breakdown.total` with respect to all four parameter blocks.
///
/// Selection masks (top-k support, aux support) and the orthogonality argmax are
/// held fixed at the values recorded in the forward evaluation.
pub fn backward(
    params: &SaeParams,
    cfg: &SaeConfig,
    x: &DenseMatrix,
    trace: &ForwardTrace,
    out: &LossOutput,
) -> Result<Gradients> {
    backward_timed(params, cfg, x, trace, out).map(|(g, _)| g)
}

/// [`backward`], also reporting the time spent on the orthogonality gradient.
pub fn backward_timed(
    params: &SaeParams,
    cfg: &SaeConfig,
    x: &DenseMatrix,
    trace: &ForwardTrace,
    out: &LossOutput,
) -> Result<(Gradients, Duration)> {
    let (b, m) = trace.latents.shape();
    let n = params.n();
    if x.shape() != (b, n) || m != params.m() || trace.active.len() != b * m {
        return Err(Error::shape("backward", format!("batch {b}x{n}, m = {}", params.m()), format!("{:?}", x.shape())));
    }
    if let Some(aux) = &out.aux {
        if aux.support.len() != b * m || aux.recon.shape() != (b, n) {
            return Err(Error::Consistency("aux trace does not match this batch".into()));
        }
    }
    if let Some(p) = &out.partition {
        p.check(m)?;
    }
    let batch = b as f64;
    let alpha = cfg.alpha;

    // d total / d recon, and d total / d aux-recon
    let mut d_recon = DenseMatrix::zeros(b, n);
    let mut d_aux = out.aux.as_ref().map(|_| DenseMatrix::zeros(b, n));
    for r in 0..b {
        let (xr, hr) = (x.row(r), trace.recon.row(r));
        let dr = d_recon.row_mut(r);
        for i in 0..n {
            dr[i] = 2.0 / batch * (hr[i] - xr[i]);
        }
        if let (Some(aux), Some(da)) = (&out.aux, d_aux.as_mut()) {
            let ar = aux.recon.row(r);
            let dar = da.row_mut(r);
            // aux = mean ‖x - recon - aux_recon‖², so it pulls on both reconstructions equally
            for i in 0..n {
                let g = alpha * 2.0 / batch * (hr[i] + ar[i] - xr[i]);
                dar[i] = g;
                dr[i] += g;
            }
        }
    }

    let w_dec_t = params.w_dec.transpose();
    let mut g_dec_t = DenseMatrix::zeros(m, n);
    let mut g_enc = DenseMatrix::zeros(m, n);
    let mut g_b_enc = vec![0.0; m];
    let mut g_b_dec = vec![0.0; n];
    let l1 = match cfg.mode {
        Mode::ReluL1 => cfg.lambda / batch,
        _ => 0.0,
    };

    let mut d_pre = vec![0.0; m];
    for r in 0..b {
        let dr = d_recon.row(r);
        for (g, d) in g_b_dec.iter_mut().zip(dr) {
            *g += d;
        }
        d_pre.iter_mut().for_each(|v| *v = 0.0);
        let mut touched = false;

        for j in trace.active_in_row(r) {
            let h = trace.latents[(r, j)];
            let gj = g_dec_t.row_mut(j);
            for i in 0..n {
                gj[i] += h * dr[i];
            }
            d_pre[j] += dot(dr, w_dec_t.row(j)) + l1;
            touched = true;
        }

        if let (Some(aux), Some(da)) = (&out.aux, d_aux.as_ref()) {
            let dar = da.row(r);
            for j in 0..m {
                if !aux.support[r * m + j] {
                    continue;
                }
                let a = aux.latents[(r, j)];
                let gj = g_dec_t.row_mut(j);
                for i in 0..n {
                    gj[i] += a * dar[i];
                }
                d_pre[j] += dot(dar, w_dec_t.row(j));
                touched = true;
            }
        }

        if touched {
            let xr = x.row(r);
            for (j, &dp) in d_pre.iter().enumerate() {
                if dp == 0.0 {
                    continue;
                }
                g_b_enc[j] += dp;
                let ge = g_enc.row_mut(j);
                for i in 0..n {
                    ge[i] += dp * xr[i];
                }
            }
        }
    }

    let started = Instant::now();
    if let Some(partition) = &out.partition {
        let weight = out.breakdown.ortho_weight;
        if weight != 0.0 {
            accumulate_gradient(&params.w_dec, partition, cfg.delta, weight, &mut g_dec_t)?;
        }
    }

    let ortho_time = started.elapsed();

    let grads = SaeParams {
        w_enc: g_enc,
        b_enc: g_b_enc,
        w_dec: g_dec_t.transpose(),
        b_dec: g_b_dec,
    };
    Ok((grads, ortho_time))
}
