//! Analytic gradients against central finite differences.

mod common;

use common::{config, instance, max_rel_error, total, Term, H, MODES, TERMS, TOL};
use ortsae::numerics::{DenseMatrix, RngStream};
use ortsae::sae::{backward, forward, loss, Mode, SaeConfig, SaeParams};

#[test]
fn every_mode_and_term_matches_finite_differences() {
    for mode in MODES {
        for term in TERMS {
            let err = max_rel_error(mode, term, 17);
            assert!(err < TOL, "{mode:?} {term:?}: relative error {err:e}");
        }
    }
}

#[test]
fn zero_gradient_at_perfect_reconstruction() {
    let p = SaeParams::new(
        DenseMatrix::identity(3),
        vec![0.0; 3],
        DenseMatrix::identity(3),
        vec![0.0; 3],
    )
    .unwrap();
    let cfg = SaeConfig {
        mode: Mode::TopK,
        k_sparsity: 3,
        alpha: 0.0,
        ..SaeConfig::default()
    };
    let x = DenseMatrix::from_rows(&[[1.0, 0.5, 0.0], [0.0, 2.0, 3.0]]).unwrap();
    let trace = forward(&p, &cfg, &x).unwrap();
    let out = loss(&p, &cfg, &x, &trace, 1, &mut RngStream::new(0), None).unwrap();
    let g = backward(&p, &cfg, &x, &trace, &out).unwrap();
    assert!(g.blocks().iter().all(|b| b.iter().all(|&v| v == 0.0)));
}

#[test]
fn orthonormal_decoder_has_flat_penalty() {
    let n = 4;
    let p = SaeParams::new(
        DenseMatrix::zeros(n, n),
        vec![0.0; n],
        DenseMatrix::identity(n),
        vec![0.0; n],
    )
    .unwrap();
    let cfg = SaeConfig {
        gamma: 1.0,
        alpha: 0.0,
        ..SaeConfig::default()
    };
    let x = DenseMatrix::zeros(2, n);
    let trace = forward(&p, &cfg, &x).unwrap();
    let rng = RngStream::new(1);
    let out = loss(&p, &cfg, &x, &trace, 1, &mut rng.clone(), None).unwrap();
    let g = backward(&p, &cfg, &x, &trace, &out).unwrap();
    assert!(g.w_dec.as_slice().iter().all(|&v| v == 0.0));
    // squared cosines are flat at zero; the central difference is O(h) only because
    // the max clips negative cosines on one side
    let dead = vec![false; n];
    let mut probe = p.clone();
    for i in 0..n * n {
        let k = n * n + n + i;
        probe.set_flat(k, p.get_flat(k) + H);
        let up = total(&probe, &cfg, &x, &dead, &rng);
        probe.set_flat(k, p.get_flat(k) - H);
        let down = total(&probe, &cfg, &x, &dead, &rng);
        probe.set_flat(k, p.get_flat(k));
        assert!(((up - down) / (2.0 * H)).abs() <= H);
    }
}

#[test]
fn stale_partition_is_rejected() {
    let (p, x, dead) = instance(3);
    let cfg = config(Mode::BatchTopK, Term::Ortho);
    let trace = forward(&p, &cfg, &x).unwrap();
    let mut out = loss(&p, &cfg, &x, &trace, 1, &mut RngStream::new(0), Some(&dead)).unwrap();
    out.partition = Some(ortsae::sae::OrthoPartition::single(16).unwrap());
    let r = backward(&p, &cfg, &x, &trace, &out);
    assert!(matches!(r, Err(ortsae::Error::Consistency(_))));
}
