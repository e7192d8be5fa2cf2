use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, RngStream};
use crate::sae::aux::{aux_reconstruction, AuxTrace};
use crate::sae::ortho::{ortho_penalty_chunked, OrthoPartition};
use crate::sae::{ForwardTrace, Mode, SaeConfig, SaeParams};

/// Individual loss terms and their weighted sum.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    pub mse: f64,
    pub sparsity: f64,
    pub aux: f64,
    pub ortho: f64,
    /// Weight the orthogonality term entered `total` with; zero on steps where it was skipped.
    pub ortho_weight: f64,
    pub total: f64,
}

/// Loss value plus the random and data-dependent choices needed to replay it in `backward`.
#[derive(Debug, Clone)]
pub struct LossOutput {
    pub breakdown: LossBreakdown,
    pub partition: Option<OrthoPartition>,
    pub aux: Option<AuxTrace>,
    /// Wall time spent evaluating the orthogonality term.
    pub ortho_time: Duration,
}

/// Evaluates the full objective on a forward trace.
///
/// The orthogonality term is evaluated only on steps where `step % penalty_period == 0`,
/// with its partition drawn from `rng`. `dead_mask` enables the auxiliary term.
pub fn loss(
    params: &SaeParams,
    cfg: &SaeConfig,
    x: &DenseMatrix,
    trace: &ForwardTrace,
    step: u64,
    rng: &mut RngStream,
    dead_mask: Option<&[bool]>,
) -> Result<LossOutput> {
    if x.shape() != trace.recon.shape() || trace.latents.cols() != params.m() {
        return Err(Error::shape(
            "loss",
            format!("x {:?} against trace {:?}", trace.recon.shape(), trace.latents.shape()),
            format!("{:?}", x.shape()),
        ));
    }
    let batch = x.rows() as f64;

    let mut mse = 0.0;
    for (a, b) in x.as_slice().iter().zip(trace.recon.as_slice()) {
        let e = a - b;
        mse += e * e;
    }
    mse /= batch;

    let sparsity = match cfg.mode {
        Mode::ReluL1 => trace.latents.as_slice().iter().sum::<f64>() / batch,
        Mode::TopK | Mode::BatchTopK => 0.0,
    };

    let aux = match dead_mask {
        Some(mask) => aux_reconstruction(params, cfg, x, trace, mask)?,
        None => None,
    };
    let aux_value = aux.as_ref().map_or(0.0, |a| a.value);

    let started = Instant::now();
    let (ortho, ortho_weight, partition) = if cfg.ortho_scheduled(step) {
        let (value, partition) = ortho_penalty_chunked(&params.w_dec, cfg.chunk_count, cfg.delta, rng)?;
        (value, cfg.gamma_effective(), Some(partition))
    } else {
        (0.0, 0.0, None)
    };
    let ortho_time = started.elapsed();

    let total = mse + cfg.lambda * sparsity + cfg.alpha * aux_value + ortho_weight * ortho;
    Ok(LossOutput {
        breakdown: LossBreakdown {
            mse,
            sparsity,
            aux: aux_value,
            ortho,
            ortho_weight,
            total,
        },
        partition,
        aux,
        ortho_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sae::forward;

    #[test]
    fn perfect_reconstruction_is_zero() {
        let p = SaeParams::new(
            DenseMatrix::identity(2),
            vec![0.0; 2],
            DenseMatrix::identity(2),
            vec![0.0; 2],
        )
        .unwrap();
        let cfg = SaeConfig {
            mode: Mode::ReluL1,
            alpha: 0.0,
            ..SaeConfig::default()
        };
        let x = DenseMatrix::from_rows(&[[1.0, 2.0]]).unwrap();
        let t = forward(&p, &cfg, &x).unwrap();
        let out = loss(&p, &cfg, &x, &t, 1, &mut RngStream::new(0), None).unwrap();
        assert_eq!(out.breakdown.total, 0.0);
    }

    #[test]
    fn identical_decoder_columns_total_one() {
        // x reconstructs exactly, so only the orthogonality term remains
        let p = SaeParams::new(
            DenseMatrix::zeros(2, 2),
            vec![0.0; 2],
            DenseMatrix::from_rows(&[[1.0, 1.0], [0.0, 0.0]]).unwrap(),
            vec![0.0; 2],
        )
        .unwrap();
        let cfg = SaeConfig {
            gamma: 1.0,
            alpha: 0.0,
            k_sparsity: 1,
            ..SaeConfig::default()
        };
        let x = DenseMatrix::zeros(3, 2);
        let t = forward(&p, &cfg, &x).unwrap();
        let out = loss(&p, &cfg, &x, &t, 1, &mut RngStream::new(0), None).unwrap();
        assert!((out.breakdown.total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn periodic_schedule_scales_weight() {
        let mut rng = RngStream::new(2);
        let p = SaeParams::init(4, 8, &mut rng);
        let cfg = SaeConfig {
            gamma: 0.25,
            penalty_period: 5,
            ..SaeConfig::default()
        };
        let x = DenseMatrix::from_fn(3, 4, |_, _| rng.standard_normal());
        let t = forward(&p, &cfg, &x).unwrap();
        for step in 1..=10u64 {
            let out = loss(&p, &cfg, &x, &t, step, &mut rng, None).unwrap();
            if step % 5 == 0 {
                assert!(out.breakdown.ortho > 0.0);
                assert_eq!(out.breakdown.ortho_weight, 1.25);
                assert!(out.partition.is_some());
            } else {
                assert_eq!(out.breakdown.ortho, 0.0);
                assert!(out.partition.is_none());
            }
        }
    }
}
