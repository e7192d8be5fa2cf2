use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::SyntheticWorld;
use crate::error::{Error, Result};
use crate::numerics::{dot, norm, DenseMatrix};

/// Columns of a dictionary as contiguous rows plus norms.
struct Dict {
    rows: DenseMatrix,
    norms: Vec<f64>,
}

impl Dict {
    fn new(w: &DenseMatrix) -> Self {
        let rows = w.transpose();
        let norms = rows.row_iter().map(norm).collect();
        Self { rows, norms }
    }

    fn len(&self) -> usize {
        self.norms.len()
    }

    #[inline]
    fn cos(&self, i: usize, other: &Dict, j: usize, delta: f64) -> f64 {
        dot(self.rows.row(i), other.rows.row(j)) / (self.norms[i] * other.norms[j]).max(delta)
    }
}

fn same_dim(op: &'static str, a: &DenseMatrix, b: &DenseMatrix) -> Result<()> {
    if a.rows() != b.rows() {
        return Err(Error::shape(op, format!("dimension {}", a.rows()), format!("dimension {}", b.rows())));
    }
    Ok(())
}

/// For each column, the largest signed cosine similarity to any other column.
pub fn nearest_cosines(w_dec: &DenseMatrix, delta: f64) -> Result<Vec<f64>> {
    let m = w_dec.cols();
    if m < 2 {
        return Err(Error::config("m", format!("need at least 2 decoder columns, got {m}")));
    }
    let d = Dict::new(w_dec);
    Ok((0..m)
        .into_par_iter()
        .map(|i| {
            (0..m)
                .filter(|&j| j != i)
                .map(|j| d.cos(i, &d, j, delta))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect())
}

/// Average over columns of the nearest-neighbour cosine similarity (signed).
pub fn mean_cos_sim(w_dec: &DenseMatrix, delta: f64) -> Result<f64> {
    let near = nearest_cosines(w_dec, delta)?;
    Ok(near.iter().sum::<f64>() / near.len() as f64)
}

/// Graph statistics of the dictionary at one similarity threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusteringPoint {
    pub threshold: f64,
    pub density: f64,
    pub coefficient: f64,
}

/// Density and global clustering coefficient of the graph joining columns whose
/// absolute cosine exceeds each threshold.
pub fn clustering_coefficient(w_dec: &DenseMatrix, thresholds: &[f64], delta: f64) -> Result<Vec<ClusteringPoint>> {
    let m = w_dec.cols();
    if m < 3 {
        return Err(Error::config("m", format!("clustering needs at least 3 columns, got {m}")));
    }
    let d = Dict::new(w_dec);
    let abs: Vec<f64> = (0..m * m)
        .into_par_iter()
        .map(|ij| {
            let (i, j) = (ij / m, ij % m);
            if i == j {
                0.0
            } else {
                d.cos(i, &d, j, delta).abs()
            }
        })
        .collect();
    let words = m.div_ceil(64);
    Ok(thresholds
        .iter()
        .map(|&t| {
            let mut adj = vec![0u64; m * words];
            let mut degree = vec![0u64; m];
            for i in 0..m {
                for j in 0..m {
                    if abs[i * m + j] > t {
                        adj[i * words + j / 64] |= 1 << (j % 64);
                        degree[i] += 1;
                    }
                }
            }
            let edges = degree.iter().sum::<u64>() / 2;
            // every triangle is seen once from each of its three edges
            let mut closed = 0u64;
            for i in 0..m {
                for j in i + 1..m {
                    if abs[i * m + j] > t {
                        let (a, b) = (&adj[i * words..(i + 1) * words], &adj[j * words..(j + 1) * words]);
                        closed += a.iter().zip(b).map(|(x, y)| (x & y).count_ones() as u64).sum::<u64>();
                    }
                }
            }
            let triples: u64 = degree.iter().map(|&k| k * k.saturating_sub(1) / 2).sum();
            ClusteringPoint {
                threshold: t,
                density: 2.0 * edges as f64 / (m * (m - 1)) as f64,
                coefficient: if triples == 0 { 0.0 } else { closed as f64 / triples as f64 },
            }
        })
        .collect())
}

/// Fraction of columns of `w_a` whose largest absolute cosine to any column of `w_b` is below `threshold`.
pub fn unique_features(w_a: &DenseMatrix, w_b: &DenseMatrix, threshold: f64, delta: f64) -> Result<f64> {
    same_dim("unique_features", w_a, w_b)?;
    let (a, b) = (Dict::new(w_a), Dict::new(w_b));
    if a.len() == 0 {
        return Ok(0.0);
    }
    let unique = (0..a.len())
        .into_par_iter()
        .filter(|&i| (0..b.len()).all(|j| a.cos(i, &b, j, delta).abs() < threshold))
        .count();
    Ok(unique as f64 / a.len() as f64)
}

/// Mean over ground-truth features of the best signed cosine to any decoder column.
pub fn ground_truth_mmcs(world: &SyntheticWorld, w_dec: &DenseMatrix, delta: f64) -> Result<f64> {
    same_dim("ground_truth_mmcs", &world.atomic_features, w_dec)?;
    let (g, d) = (Dict::new(&world.atomic_features), Dict::new(w_dec));
    if g.len() == 0 {
        return Ok(0.0);
    }
    let best: Vec<f64> = (0..g.len())
        .into_par_iter()
        .map(|f| (0..d.len()).map(|j| g.cos(f, &d, j, delta)).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    Ok(best.iter().sum::<f64>() / g.len() as f64)
}
