//! Finite-difference gradient checking shared by the gradient and acceptance tests.
#![allow(dead_code)]

use ortsae::numerics::{DenseMatrix, RngStream};
use ortsae::sae::{backward, forward, loss, Mode, SaeConfig, SaeParams};

pub const H: f64 = 1e-5;
/// Smallest denominator for the relative error; see [`max_rel_error`].
pub const FLOOR: f64 = 1e-6;
pub const TOL: f64 = 1e-5;

#[derive(Clone, Copy, Debug)]
pub enum Term {
    Mse,
    L1,
    Aux,
    Ortho,
    All,
}

pub const TERMS: [Term; 5] = [Term::Mse, Term::L1, Term::Aux, Term::Ortho, Term::All];
pub const MODES: [Mode; 3] = [Mode::ReluL1, Mode::TopK, Mode::BatchTopK];

pub fn config(mode: Mode, term: Term) -> SaeConfig {
    let relu = mode == Mode::ReluL1;
    let mut cfg = SaeConfig {
        mode,
        k_sparsity: 4,
        lambda: 0.0,
        alpha: 0.0,
        gamma: 0.0,
        chunk_count: 4,
        aux_k: Some(6),
        ..SaeConfig::default()
    };
    match term {
        Term::Mse => {}
        Term::L1 => cfg.lambda = if relu { 0.3 } else { 0.0 },
        Term::Aux => cfg.alpha = 0.7,
        Term::Ortho => cfg.gamma = 0.9,
        Term::All => {
            cfg.lambda = if relu { 0.3 } else { 0.0 };
            cfg.alpha = 0.7;
            cfg.gamma = 0.9;
        }
    }
    cfg
}

pub fn instance(seed: u64) -> (SaeParams, DenseMatrix, Vec<bool>) {
    let (n, m, b) = (8, 32, 4);
    let mut rng = RngStream::new(seed);
    let mut p = SaeParams::init(n, m, &mut rng);
    for v in p.w_enc.as_mut_slice() {
        *v += 0.3 * rng.standard_normal();
    }
    for v in p.w_dec.as_mut_slice() {
        *v *= rng.uniform_range(0.5, 1.5);
    }
    p.b_enc.iter_mut().for_each(|v| *v = 0.2 * rng.standard_normal());
    p.b_dec.iter_mut().for_each(|v| *v = 0.2 * rng.standard_normal());
    let x = DenseMatrix::from_fn(b, n, |_, _| rng.standard_normal());
    let dead: Vec<bool> = (0..m).map(|_| rng.bernoulli(0.5)).collect();
    (p, x, dead)
}

pub fn total(p: &SaeParams, cfg: &SaeConfig, x: &DenseMatrix, dead: &[bool], rng: &RngStream) -> f64 {
    let trace = forward(p, cfg, x).unwrap();
    loss(p, cfg, x, &trace, 1, &mut rng.clone(), Some(dead))
        .unwrap()
        .breakdown
        .total
}

/// Worst per-coordinate relative error between analytic and numeric gradients.
///
/// The denominator is `max(|analytic|, |numeric|, floor)`. A central difference on a loss
/// of size `L` carries roundoff near `eps * L / h`, so below `eps * L / (h * TOL)` roundoff
/// alone could reach `TOL`; the floor is that bound, never less than [`FLOOR`].
pub fn max_rel_error(mode: Mode, term: Term, seed: u64) -> f64 {
    let cfg = config(mode, term);
    let (p, x, dead) = instance(seed);
    let rng = RngStream::for_step(seed, 2, 1);
    let trace = forward(&p, &cfg, &x).unwrap();
    let out = loss(&p, &cfg, &x, &trace, 1, &mut rng.clone(), Some(&dead)).unwrap();
    let grads = backward(&p, &cfg, &x, &trace, &out).unwrap();
    let floor = FLOOR.max(f64::EPSILON * out.breakdown.total.abs() / (H * TOL));

    let mut worst: f64 = 0.0;
    let mut probe = p.clone();
    for i in 0..p.len() {
        let orig = p.get_flat(i);
        probe.set_flat(i, orig + H);
        let up = total(&probe, &cfg, &x, &dead, &rng);
        probe.set_flat(i, orig - H);
        let down = total(&probe, &cfg, &x, &dead, &rng);
        probe.set_flat(i, orig);
        let numeric = (up - down) / (2.0 * H);
        let analytic = grads.get_flat(i);
        let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(floor);
        worst = worst.max(rel);
    }
    worst
}
