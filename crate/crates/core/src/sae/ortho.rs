//! Decoder orthogonality penalty.
//!
//! Latents are partitioned into equal chunks; within each chunk every latent
//! contributes the square of its largest cosine similarity to another member.
//! Chunk means are averaged. A single chunk gives the exact all-pairs penalty.

use crate::error::{Error, Result};
use crate::numerics::{dot, norm, DenseMatrix, RngStream};

/// `⟨u, v⟩ / max(‖u‖·‖v‖, delta)`.
pub fn cosine_sim(u: &[f64], v: &[f64], delta: f64) -> f64 {
    dot(u, v) / (norm(u) * norm(v)).max(delta)
}

/// Assignment of latent indices to chunks. Members of each chunk are stored ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrthoPartition {
    m: usize,
    chunks: Vec<Vec<usize>>,
}

impl OrthoPartition {
    /// One chunk holding every latent.
    pub fn single(m: usize) -> Result<Self> {
        Self::random(m, 1, &mut RngStream::new(0))
    }

    /// Shuffles `0..m` and splits it into `chunk_count` equal chunks.
    pub fn random(m: usize, chunk_count: usize, rng: &mut RngStream) -> Result<Self> {
        if chunk_count == 0 || !m.is_multiple_of(chunk_count) {
            return Err(Error::config(
                "chunk_count",
                format!("latent count {m} is not divisible by {chunk_count}"),
            ));
        }
        let size = m / chunk_count;
        if size < 2 {
            return Err(Error::config(
                "chunk_count",
                format!("chunk size {size} is below 2 (m = {m}, chunks = {chunk_count})"),
            ));
        }
        let perm = rng.permutation(m);
        let chunks = perm
            .chunks(size)
            .map(|c| {
                let mut c = c.to_vec();
                c.sort_unstable();
                c
            })
            .collect();
        Ok(Self { m, chunks })
    }

    /// Builds a partition from explicit chunks, checking that it covers `0..m` exactly once.
    pub fn from_chunks(m: usize, chunks: Vec<Vec<usize>>) -> Result<Self> {
        let mut chunks = chunks;
        chunks.iter_mut().for_each(|c| c.sort_unstable());
        let p = Self { m, chunks };
        p.check(m)?;
        Ok(p)
    }

    pub fn latent_count(&self) -> usize {
        self.m
    }

    pub fn chunks(&self) -> &[Vec<usize>] {
        &self.chunks
    }

    /// Verifies the partition was drawn for a dictionary of `m` latents.
    pub fn check(&self, m: usize) -> Result<()> {
        if self.m != m {
            return Err(Error::Consistency(format!(
                "partition covers {} latents, decoder has {m}",
                self.m
            )));
        }
        let mut seen = vec![false; m];
        for chunk in &self.chunks {
            if chunk.len() < 2 {
                return Err(Error::Consistency("partition chunk with fewer than 2 members".into()));
            }
            for &i in chunk {
                if i >= m || std::mem::replace(&mut seen[i], true) {
                    return Err(Error::Consistency(format!("partition index {i} out of range or repeated")));
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Consistency("partition does not cover every latent".into()));
        }
        Ok(())
    }
}

/// Decoder columns laid out contiguously, with their norms.
struct Columns {
    rows: DenseMatrix,
    norms: Vec<f64>,
}

impl Columns {
    fn new(w_dec: &DenseMatrix) -> Self {
        let rows = w_dec.transpose();
        let norms = rows.row_iter().map(norm).collect();
        Self { rows, norms }
    }

    #[inline]
    fn cos(&self, i: usize, j: usize, delta: f64) -> f64 {
        dot(self.rows.row(i), self.rows.row(j)) / (self.norms[i] * self.norms[j]).max(delta)
    }

    /// For every member of `chunk`, its most similar other member and that cosine.
    /// Ties resolve to the lowest index.
    fn nearest(&self, chunk: &[usize], delta: f64) -> Vec<(usize, f64)> {
        let s = chunk.len();
        let mut sims = vec![0.0; s * s];
        for a in 0..s {
            for b in a + 1..s {
                let c = self.cos(chunk[a], chunk[b], delta);
                sims[a * s + b] = c;
                sims[b * s + a] = c;
            }
        }
        (0..s)
            .map(|a| {
                let mut best = (usize::MAX, f64::NEG_INFINITY);
                for b in 0..s {
                    if b != a && sims[a * s + b] > best.1 {
                        best = (b, sims[a * s + b]);
                    }
                }
                (chunk[best.0], best.1)
            })
            .collect()
    }
}

/// Penalty value for a given partition.
pub fn ortho_penalty_on(w_dec: &DenseMatrix, partition: &OrthoPartition, delta: f64) -> Result<f64> {
    partition.check(w_dec.cols())?;
    let cols = Columns::new(w_dec);
    let mut total = 0.0;
    for chunk in partition.chunks() {
        let sq: f64 = cols.nearest(chunk, delta).iter().map(|&(_, c)| c * c).sum();
        total += sq / chunk.len() as f64;
    }
    Ok(total / partition.chunks().len() as f64)
}

/// Penalty over a fresh random partition drawn from `rng`; the partition is returned for gradient replay.
pub fn ortho_penalty_chunked(
    w_dec: &DenseMatrix,
    chunk_count: usize,
    delta: f64,
    rng: &mut RngStream,
) -> Result<(f64, OrthoPartition)> {
    let partition = OrthoPartition::random(w_dec.cols(), chunk_count, rng)?;
    let value = ortho_penalty_on(w_dec, &partition, delta)?;
    Ok((value, partition))
}

/// Exact all-pairs penalty (`O(m²)`).
pub fn ortho_penalty_full(w_dec: &DenseMatrix, delta: f64) -> Result<f64> {
    let m = w_dec.cols();
    if m < 2 {
        return Err(Error::config("m", format!("penalty needs at least 2 latents, got {m}")));
    }
    ortho_penalty_on(w_dec, &OrthoPartition::single(m)?, delta)
}

/// Adds `weight * ∂penalty/∂W_dec` into `grad_t`, which is laid out `m x n` (one row per decoder column).
pub(crate) fn accumulate_gradient(
    w_dec: &DenseMatrix,
    partition: &OrthoPartition,
    delta: f64,
    weight: f64,
    grad_t: &mut DenseMatrix,
) -> Result<()> {
    partition.check(w_dec.cols())?;
    let cols = Columns::new(w_dec);
    let chunk_count = partition.chunks().len() as f64;
    for chunk in partition.chunks() {
        let scale = weight / (chunk_count * chunk.len() as f64);
        for (&i, (j, c)) in chunk.iter().zip(cols.nearest(chunk, delta)) {
            // d(c²) = 2c dc
            let w = 2.0 * c * scale;
            if w == 0.0 {
                continue;
            }
            let (ni, nj) = (cols.norms[i], cols.norms[j]);
            let denom = ni * nj;
            let (u, v) = (cols.rows.row(i), cols.rows.row(j));
            if denom > delta {
                let inv = 1.0 / denom;
                let (ci, cj) = (c / (ni * ni), c / (nj * nj));
                for k in 0..u.len() {
                    grad_t[(i, k)] += w * (v[k] * inv - ci * u[k]);
                    grad_t[(j, k)] += w * (u[k] * inv - cj * v[k]);
                }
            } else {
                for k in 0..u.len() {
                    grad_t[(i, k)] += w * v[k] / delta;
                    grad_t[(j, k)] += w * u[k] / delta;
                }
            }
        }
    }
    Ok(())
}
