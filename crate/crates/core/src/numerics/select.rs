use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

#[inline]
fn rank_order(values: &[f64], a: usize, b: usize) -> Ordering {
    // adding 0.0 folds -0.0 into 0.0 so signed zeros tie
    (values[b] + 0.0).total_cmp(&(values[a] + 0.0)).then(a.cmp(&b))
}

/// Indices of the `k` largest values, largest first. Ties go to the lower index.
pub fn topk_indices(values: &[f64], k: usize) -> Vec<usize> {
    let k = k.min(values.len());
    if k == 0 {
        return Vec::new();
    }
    let mut idx: Vec<usize> = (0..values.len()).collect();
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, |&a, &b| rank_order(values, a, b));
        idx.truncate(k);
    }
    idx.sort_unstable_by(|&a, &b| rank_order(values, a, b));
    idx
}

/// Sum over columns of the per-column population variance (divisor = rows).
pub fn row_variance_total(x: &DenseMatrix) -> Result<f64> {
    let rows = x.rows();
    if rows < 2 {
        return Err(Error::InsufficientData(format!(
            "variance needs at least 2 rows, got {rows}"
        )));
    }
    let mut mean = vec![0.0; x.cols()];
    for row in x.row_iter() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= rows as f64;
    }
    let mut total = 0.0;
    for row in x.row_iter() {
        for (m, v) in mean.iter().zip(row) {
            let d = v - m;
            total += d * d;
        }
    }
    Ok(total / rows as f64)
}
