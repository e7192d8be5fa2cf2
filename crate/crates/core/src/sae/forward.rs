use crate::error::{Error, Result};
use crate::numerics::{topk_indices, DenseMatrix};
use crate::sae::{Mode, SaeConfig, SaeParams};

/// Encoder output for a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoding {
    /// `x · W_encᵀ + b_enc`, `B x m`.
    pub preacts: DenseMatrix,
    /// Selected nonnegative activations, `B x m`.
    pub latents: DenseMatrix,
    /// Row-major `B x m`; `true` where a latent is both selected and positive.
    pub active: Vec<bool>,
}

/// Everything the loss and backward pass need from one forward evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub preacts: DenseMatrix,
    pub latents: DenseMatrix,
    pub recon: DenseMatrix,
    pub active: Vec<bool>,
}

impl ForwardTrace {
    pub fn batch(&self) -> usize {
        self.latents.rows()
    }

    /// Active latent channels of row `b`, ascending.
    pub fn active_in_row(&self, b: usize) -> impl Iterator<Item = usize> + '_ {
        let m = self.latents.cols();
        self.active[b * m..(b + 1) * m]
            .iter()
            .enumerate()
            .filter_map(|(j, &a)| a.then_some(j))
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    /// Mean number of active latents per example.
    pub fn mean_l0(&self) -> f64 {
        self.active_count() as f64 / self.batch().max(1) as f64
    }
}

pub fn encode(params: &SaeParams, cfg: &SaeConfig, x: &DenseMatrix) -> Result<Encoding> {
    if x.cols() != params.n() {
        return Err(Error::shape("encode", format!("{} input columns", params.n()), x.cols()));
    }
    let mut preacts = x.matmul_transb(&params.w_enc)?;
    preacts.add_row_broadcast(&params.b_enc);

    let (b, m) = preacts.shape();
    let mut latents = DenseMatrix::zeros(b, m);
    let mut active = vec![false; b * m];
    let relu = |v: f64| if v > 0.0 { v } else { 0.0 };
    match cfg.mode {
        Mode::ReluL1 => {
            for (i, &p) in preacts.as_slice().iter().enumerate() {
                if p > 0.0 {
                    latents.as_mut_slice()[i] = p;
                    active[i] = true;
                }
            }
        }
        Mode::TopK => {
            for r in 0..b {
                let post: Vec<f64> = preacts.row(r).iter().map(|&v| relu(v)).collect();
                for j in topk_indices(&post, cfg.k_sparsity) {
                    if post[j] > 0.0 {
                        latents[(r, j)] = post[j];
                        active[r * m + j] = true;
                    }
                }
            }
        }
        Mode::BatchTopK => {
            let post: Vec<f64> = preacts.as_slice().iter().map(|&v| relu(v)).collect();
            for i in topk_indices(&post, b * cfg.k_sparsity) {
                if post[i] > 0.0 {
                    latents.as_mut_slice()[i] = post[i];
                    active[i] = true;
                }
            }
        }
    }
    Ok(Encoding {
        preacts,
        latents,
        active,
    })
}

/// `latents · W_decᵀ + b_dec`.
pub fn decode(params: &SaeParams, latents: &DenseMatrix) -> Result<DenseMatrix> {
    if latents.cols() != params.m() {
        return Err(Error::shape("decode", format!("{} latent columns", params.m()), latents.cols()));
    }
    // zero latents are skipped inside matmul, so sparse codes decode cheaply
    let mut recon = latents.matmul(&params.w_dec.transpose())?;
    recon.add_row_broadcast(&params.b_dec);
    Ok(recon)
}

pub fn forward(params: &SaeParams, cfg: &SaeConfig, x: &DenseMatrix) -> Result<ForwardTrace> {
    let Encoding {
        preacts,
        latents,
        active,
    } = encode(params, cfg, x)?;
    let recon = decode(params, &latents)?;
    Ok(ForwardTrace {
        preacts,
        latents,
        recon,
        active,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;

    fn identity_params(n: usize) -> SaeParams {
        SaeParams::new(
            DenseMatrix::identity(n),
            vec![0.0; n],
            DenseMatrix::identity(n),
            vec![0.0; n],
        )
        .unwrap()
    }

    fn cfg(mode: Mode, k: usize) -> SaeConfig {
        SaeConfig {
            mode,
            k_sparsity: k,
            ..SaeConfig::default()
        }
    }

    #[test]
    fn relu_zeroes_negatives() {
        let p = identity_params(2);
        let x = DenseMatrix::from_rows(&[[1.0, -2.0]]).unwrap();
        let e = encode(&p, &cfg(Mode::ReluL1, 0), &x).unwrap();
        assert_eq!(e.latents.as_slice(), &[1.0, 0.0]);
        assert_eq!(e.active, vec![true, false]);
    }

    #[test]
    fn topk_keeps_two_largest() {
        let p = identity_params(4);
        let x = DenseMatrix::from_rows(&[[0.5, -1.0, 2.0, 0.1]]).unwrap();
        let e = encode(&p, &cfg(Mode::TopK, 2), &x).unwrap();
        assert_eq!(e.latents.as_slice(), &[0.5, 0.0, 2.0, 0.0]);
    }

    #[test]
    fn batch_topk_ranks_globally() {
        let p = identity_params(2);
        let x = DenseMatrix::from_rows(&[[3.0, 0.2], [1.0, 2.0]]).unwrap();
        let e = encode(&p, &cfg(Mode::BatchTopK, 1), &x).unwrap();
        // brute force: post-ReLU entries 3, 0.2, 1, 2; the global top two are 3 and 2
        let mut entries: Vec<(f64, usize)> = x.as_slice().iter().copied().zip(0..).collect();
        entries.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let mut want = vec![0.0; 4];
        for &(v, i) in &entries[..2] {
            want[i] = v;
        }
        assert_eq!(e.latents.as_slice(), want.as_slice());
        assert_eq!(e.latents.as_slice(), &[3.0, 0.0, 0.0, 2.0]);
    }

    #[test]
    fn fewer_positives_than_budget() {
        let p = identity_params(3);
        let x = DenseMatrix::from_rows(&[[1.0, -1.0, -2.0]]).unwrap();
        for mode in [Mode::TopK, Mode::BatchTopK] {
            let e = encode(&p, &cfg(mode, 3), &x).unwrap();
            assert_eq!(e.active, vec![true, false, false]);
        }
    }

    #[test]
    fn decode_examples() {
        let p = identity_params(2);
        let h = DenseMatrix::from_rows(&[[1.0, 0.0]]).unwrap();
        assert_eq!(decode(&p, &h).unwrap().as_slice(), &[1.0, 0.0]);

        let mut rng = RngStream::new(8);
        let mut p = SaeParams::init(3, 5, &mut rng);
        p.b_dec = vec![0.5, -1.0, 2.0];
        let zero = DenseMatrix::zeros(4, 5);
        let r = decode(&p, &zero).unwrap();
        for row in r.row_iter() {
            assert_eq!(row, p.b_dec.as_slice());
        }
    }

    #[test]
    fn decode_matches_naive_loop() {
        let mut rng = RngStream::new(21);
        let n = 6;
        let mut p = SaeParams::init(n, 8, &mut rng);
        p.b_dec = (0..n).map(|_| rng.standard_normal()).collect();
        let h = DenseMatrix::from_fn(4, 8, |_, _| rng.uniform_range(0.0, 2.0));
        let got = decode(&p, &h).unwrap();
        for b in 0..4 {
            for i in 0..n {
                let mut s = p.b_dec[i];
                for j in 0..8 {
                    s += p.w_dec[(i, j)] * h[(b, j)];
                }
                assert!((got[(b, i)] - s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shape_errors() {
        let p = identity_params(2);
        let x = DenseMatrix::zeros(1, 3);
        assert!(matches!(encode(&p, &cfg(Mode::ReluL1, 0), &x), Err(Error::Shape { .. })));
        assert!(matches!(decode(&p, &x), Err(Error::Shape { .. })));
    }

    #[test]
    fn identity_round_trip() {
        let p = identity_params(3);
        let x = DenseMatrix::from_rows(&[[0.0, 1.5, 2.0], [3.0, 0.25, 0.0]]).unwrap();
        for mode in [Mode::ReluL1, Mode::TopK, Mode::BatchTopK] {
            let t = forward(&p, &cfg(mode, 3), &x).unwrap();
            assert_eq!(t.recon, x);
        }
    }
}
