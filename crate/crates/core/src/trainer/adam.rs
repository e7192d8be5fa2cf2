use crate::error::{Error, Result};
use crate::sae::{Gradients, SaeParams};

/// Adam hyperparameters, separated from the loop config so the update can be tested alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }
}

/// First and second moment accumulators plus the update count.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: SaeParams,
    pub v: SaeParams,
    pub step: u64,
}

impl AdamState {
    pub fn new(n: usize, m: usize) -> Self {
        Self {
            m: SaeParams::zeros(n, m),
            v: SaeParams::zeros(n, m),
            step: 0,
        }
    }
}

/// Removes from every decoder-column gradient its component along the column.
pub fn project_decoder_gradient(params: &SaeParams, grads: &mut Gradients) {
    let (n, m) = params.w_dec.shape();
    let mut along = vec![0.0; m];
    let mut sq = vec![0.0; m];
    for r in 0..n {
        let (w, g) = (params.w_dec.row(r), grads.w_dec.row(r));
        for j in 0..m {
            along[j] += w[j] * g[j];
            sq[j] += w[j] * w[j];
        }
    }
    for r in 0..n {
        let w = params.w_dec.row(r).to_vec();
        let g = grads.w_dec.row_mut(r);
        for j in 0..m {
            if sq[j] > 0.0 {
                g[j] -= along[j] / sq[j] * w[j];
            }
        }
    }
}

/// One bias-corrected Adam update. With `unit_norm_decoder`, the decoder gradient is
/// projected onto the tangent of each column before the update and columns are
/// renormalized after it.
pub fn adam_step(
    state: &mut AdamState,
    params: &mut SaeParams,
    grads: &Gradients,
    lr: f64,
    cfg: &AdamConfig,
    unit_norm_decoder: bool,
) -> Result<()> {
    params.check()?;
    grads.check()?;
    if grads.n() != params.n() || grads.m() != params.m() {
        return Err(Error::shape(
            "adam_step",
            format!("gradients for {}x{}", params.n(), params.m()),
            format!("{}x{}", grads.n(), grads.m()),
        ));
    }
    if !grads.is_finite() {
        return Err(Error::NonFinite(format!("gradient at update {}", state.step + 1)));
    }
    let projected;
    let grads = if unit_norm_decoder {
        let mut g = grads.clone();
        project_decoder_gradient(params, &mut g);
        projected = g;
        &projected
    } else {
        grads
    };

    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    let (b1, b2, eps, wd) = (cfg.beta1, cfg.beta2, cfg.eps, cfg.weight_decay);

    let blocks = params
        .blocks_mut()
        .into_iter()
        .zip(grads.blocks())
        .zip(state.m.blocks_mut().into_iter().zip(state.v.blocks_mut()));
    for ((p, g), (m, v)) in blocks {
        for i in 0..p.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            p[i] -= lr * (m_hat / (v_hat.sqrt() + eps) + wd * p[i]);
        }
    }
    if unit_norm_decoder {
        params.normalize_decoder();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{DenseMatrix, RngStream};

    fn scalar(v: f64) -> SaeParams {
        SaeParams::new(
            DenseMatrix::from_vec(1, 1, vec![v]).unwrap(),
            vec![0.0],
            DenseMatrix::zeros(1, 1),
            vec![0.0],
        )
        .unwrap()
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut rng = RngStream::new(1);
        let mut p = SaeParams::init(3, 4, &mut rng);
        let before = p.clone();
        let mut s = AdamState::new(3, 4);
        adam_step(&mut s, &mut p, &SaeParams::zeros(3, 4), 1e-3, &AdamConfig::default(), false).unwrap();
        assert_eq!(p, before);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn first_step_closed_form() {
        let (lr, eps) = (2e-4, 1e-8);
        let mut p = scalar(0.5);
        let mut s = AdamState::new(1, 1);
        adam_step(&mut s, &mut p, &scalar(1.0), lr, &AdamConfig::default(), false).unwrap();
        // m_hat = 1, v_hat = 1 after bias correction
        let want = 0.5 - lr / (1.0 + eps);
        assert!((p.w_enc[(0, 0)] - want).abs() < 1e-15);
    }

    #[test]
    fn two_step_recurrence() {
        let cfg = AdamConfig::default();
        let lr = 1e-2;
        let g = 0.37;
        let mut p = scalar(1.0);
        let mut s = AdamState::new(1, 1);
        adam_step(&mut s, &mut p, &scalar(g), lr, &cfg, false).unwrap();
        adam_step(&mut s, &mut p, &scalar(g), lr, &cfg, false).unwrap();

        let (mut w, mut m, mut v) = (1.0f64, 0.0f64, 0.0f64);
        for t in 1..=2 {
            m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
            v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
            let mh = m / (1.0 - cfg.beta1.powi(t));
            let vh = v / (1.0 - cfg.beta2.powi(t));
            w -= lr * mh / (vh.sqrt() + cfg.eps);
        }
        assert!((p.w_enc[(0, 0)] - w).abs() < 1e-12);
    }

    #[test]
    fn decoupled_weight_decay() {
        let cfg = AdamConfig {
            weight_decay: 0.1,
            ..AdamConfig::default()
        };
        let mut p = scalar(2.0);
        let mut s = AdamState::new(1, 1);
        adam_step(&mut s, &mut p, &scalar(0.0), 0.5, &cfg, false).unwrap();
        assert!((p.w_enc[(0, 0)] - 2.0 * (1.0 - 0.05)).abs() < 1e-15);
    }

    #[test]
    fn non_finite_gradient_aborts() {
        let mut p = scalar(1.0);
        let mut s = AdamState::new(1, 1);
        let r = adam_step(&mut s, &mut p, &scalar(f64::NAN), 1e-3, &AdamConfig::default(), false);
        assert!(matches!(r, Err(Error::NonFinite(_))));
        assert_eq!(s.step, 0);
    }

    #[test]
    fn unit_norm_decoder_is_kept() {
        let mut rng = RngStream::new(5);
        let mut p = SaeParams::init(4, 6, &mut rng);
        let mut g = SaeParams::zeros(4, 6);
        g.w_dec = DenseMatrix::from_fn(4, 6, |_, _| rng.standard_normal());
        let mut s = AdamState::new(4, 6);
        for _ in 0..10 {
            adam_step(&mut s, &mut p, &g, 0.05, &AdamConfig::default(), true).unwrap();
        }
        for norm in p.w_dec.column_norms() {
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_removes_parallel_component() {
        let mut rng = RngStream::new(6);
        let p = SaeParams::init(5, 3, &mut rng);
        let mut g = SaeParams::zeros(5, 3);
        g.w_dec = DenseMatrix::from_fn(5, 3, |_, _| rng.standard_normal());
        project_decoder_gradient(&p, &mut g);
        for j in 0..3 {
            let d: f64 = (0..5).map(|r| p.w_dec[(r, j)] * g.w_dec[(r, j)]).sum();
            assert!(d.abs() < 1e-12);
        }
    }
}
