use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{dot, norm, DenseMatrix};

/// Acceptance thresholds for [`decompose_feature`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecomposeOptions {
    pub max_atoms: usize,
    pub cos_accept: f64,
    pub coef_min: f64,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        Self {
            max_atoms: 5,
            cos_accept: 0.95,
            coef_min: 0.1,
        }
    }
}

/// A target written as a nonnegative combination of unit-normalized dictionary columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    /// Ascending column indices.
    pub atoms: Vec<usize>,
    pub coefficients: Vec<f64>,
    /// Cosine between the target and the reconstruction.
    pub cosine: f64,
}

/// Least squares on `support`, pruning atoms until every coefficient is positive.
fn nonneg_refit(target: &[f64], unit: &[Vec<f64>], mut support: Vec<usize>) -> (Vec<usize>, Vec<f64>) {
    loop {
        if support.is_empty() {
            return (support, Vec::new());
        }
        let n = target.len();
        let a = DMatrix::from_fn(n, support.len(), |i, k| unit[support[k]][i]);
        let b = DVector::from_column_slice(target);
        let coef = a
            .svd(true, true)
            .solve(&b, 1e-12)
            .map(|c| c.iter().copied().collect::<Vec<_>>())
            .unwrap_or_else(|_| vec![0.0; support.len()]);
        if coef.iter().all(|&c| c > 0.0) {
            return (support, coef);
        }
        // drop the most negative atom and refit
        let worst = (0..coef.len())
            .min_by(|&i, &j| coef[i].total_cmp(&coef[j]))
            .expect("non-empty");
        support.remove(worst);
    }
}

fn combine(unit: &[Vec<f64>], atoms: &[usize], coef: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (&j, &c) in atoms.iter().zip(coef) {
        for (o, u) in out.iter_mut().zip(&unit[j]) {
            *o += c * u;
        }
    }
    out
}

/// Nonnegative orthogonal matching pursuit of `target` over the columns of `w_dec`.
///
/// Returns `None` unless the final reconstruction has cosine above
/// `cos_accept` with every coefficient at least `coef_min`.
pub fn decompose_feature(target: &[f64], w_dec: &DenseMatrix, opts: &DecomposeOptions) -> Result<Option<Decomposition>> {
    let n = w_dec.rows();
    if target.len() != n {
        return Err(Error::shape("decompose_feature", format!("target of length {n}"), target.len()));
    }
    let t_norm = norm(target);
    if t_norm == 0.0 || opts.max_atoms == 0 {
        return Ok(None);
    }
    // zero columns get a zero direction and are never selected
    let unit: Vec<Vec<f64>> = (0..w_dec.cols())
        .map(|j| {
            let c = w_dec.column(j);
            let len = norm(&c);
            if len > 0.0 {
                c.iter().map(|v| v / len).collect()
            } else {
                vec![0.0; n]
            }
        })
        .collect();
    let cos_of = |atoms: &[usize], coef: &[f64]| {
        let approx = combine(&unit, atoms, coef, n);
        let a = norm(&approx);
        if a == 0.0 {
            0.0
        } else {
            dot(target, &approx) / (t_norm * a)
        }
    };

    let mut support: Vec<usize> = Vec::new();
    let mut coef: Vec<f64> = Vec::new();
    let mut residual = target.to_vec();
    while support.len() < opts.max_atoms {
        let pick = (0..unit.len())
            .filter(|j| !support.contains(j))
            .map(|j| (j, dot(&residual, &unit[j])))
            .filter(|&(_, c)| c > 1e-12 * t_norm)
            .fold(None, |best: Option<(usize, f64)>, cand| match best {
                Some(b) if b.1 >= cand.1 => Some(b),
                _ => Some(cand),
            });
        let Some((j, _)) = pick else { break };
        let mut trial = support.clone();
        trial.push(j);
        trial.sort_unstable();
        let (s, c) = nonneg_refit(target, &unit, trial);
        if s == support {
            break;
        }
        support = s;
        coef = c;
        let approx = combine(&unit, &support, &coef, n);
        residual = target.iter().zip(&approx).map(|(t, a)| t - a).collect();
        if cos_of(&support, &coef) > opts.cos_accept {
            break;
        }
    }

    // drop weak atoms and refit until stable
    loop {
        let keep: Vec<usize> = support
            .iter()
            .zip(&coef)
            .filter(|&(_, &c)| c >= opts.coef_min)
            .map(|(&j, _)| j)
            .collect();
        if keep.len() == support.len() {
            break;
        }
        (support, coef) = nonneg_refit(target, &unit, keep);
    }
    if support.is_empty() {
        return Ok(None);
    }
    let cosine = cos_of(&support, &coef);
    if cosine > opts.cos_accept && coef.iter().all(|&c| c >= opts.coef_min) {
        Ok(Some(Decomposition {
            atoms: support,
            coefficients: coef,
            cosine,
        }))
    } else {
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;

    fn dict() -> DenseMatrix {
        let mut rng = RngStream::new(4);
        let mut w = DenseMatrix::from_fn(8, 6, |_, _| rng.standard_normal());
        // columns 1 and 2 are orthonormal e_6, e_7
        for i in 0..8 {
            w[(i, 1)] = if i == 6 { 1.0 } else { 0.0 };
            w[(i, 2)] = if i == 7 { 1.0 } else { 0.0 };
        }
        for j in [0, 3, 4, 5] {
            w[(6, j)] = 0.0;
            w[(7, j)] = 0.0;
        }
        w
    }

    #[test]
    fn single_column_target() {
        let w = dict();
        let target: Vec<f64> = w.column(4).iter().map(|v| 2.5 * v).collect();
        let d = decompose_feature(&target, &w, &DecomposeOptions::default()).unwrap().unwrap();
        assert_eq!(d.atoms, vec![4]);
        assert!((d.coefficients[0] - norm(&target)).abs() < 1e-10);
    }

    #[test]
    fn orthogonal_target_is_rejected() {
        let w = DenseMatrix::from_columns(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        assert_eq!(decompose_feature(&[0.0, 0.0, 1.0], &w, &DecomposeOptions::default()).unwrap(), None);
    }

    #[test]
    fn two_atom_combination() {
        let w = dict();
        let mut target = vec![0.0; 8];
        target[6] = 0.7;
        target[7] = 0.7;
        let d = decompose_feature(&target, &w, &DecomposeOptions::default()).unwrap().unwrap();
        assert_eq!(d.atoms, vec![1, 2]);
        for c in &d.coefficients {
            assert!((c - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn acceptance_implies_recomputed_cosine() {
        let mut rng = RngStream::new(12);
        let w = DenseMatrix::from_fn(10, 30, |_, _| rng.standard_normal());
        let opts = DecomposeOptions::default();
        let mut accepted = 0;
        for trial in 0..40 {
            let a = trial % 30;
            let b = (trial * 7 + 3) % 30;
            let mut t: Vec<f64> = w.column(a);
            for (v, u) in t.iter_mut().zip(w.column(b)) {
                *v += rng.uniform() * u;
            }
            if let Some(d) = decompose_feature(&t, &w, &opts).unwrap() {
                accepted += 1;
                let mut approx = vec![0.0; 10];
                for (&j, &c) in d.atoms.iter().zip(&d.coefficients) {
                    let col = w.column(j);
                    let len = norm(&col);
                    for (o, v) in approx.iter_mut().zip(col) {
                        *o += c * v / len;
                    }
                }
                let cos = dot(&t, &approx) / (norm(&t) * norm(&approx));
                assert!(cos > opts.cos_accept);
                assert!((cos - d.cosine).abs() < 1e-12);
                assert!(d.coefficients.iter().all(|&c| c >= opts.coef_min));
            }
        }
        assert!(accepted > 0);
    }

    #[test]
    fn wrong_length_is_shape_error() {
        let w = dict();
        assert!(matches!(decompose_feature(&[1.0], &w, &DecomposeOptions::default()), Err(Error::Shape { .. })));
    }
}
