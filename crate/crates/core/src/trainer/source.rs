use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, RngStream};

/// Supplies training batches of a fixed width.
pub trait DataSource {
    fn dim(&self) -> usize;
    fn next_batch(&mut self, batch: usize) -> Result<DenseMatrix>;
}

/// Cycles through an in-memory matrix, reshuffling row order at the start of every pass.
#[derive(Debug, Clone)]
pub struct MatrixSource {
    data: DenseMatrix,
    order: Vec<usize>,
    cursor: usize,
    rng: RngStream,
    epochs: u64,
}

impl MatrixSource {
    pub fn new(data: DenseMatrix, rng: RngStream) -> Result<Self> {
        if data.rows() == 0 {
            return Err(Error::InsufficientData("data source has no rows".into()));
        }
        let mut s = Self {
            order: Vec::new(),
            cursor: 0,
            rng,
            data,
            epochs: 0,
        };
        s.reshuffle();
        Ok(s)
    }

    fn reshuffle(&mut self) {
        self.order = self.rng.permutation(self.data.rows());
        self.cursor = 0;
        self.epochs += 1;
    }

    /// Passes started so far, including the current one.
    pub fn epochs(&self) -> u64 {
        self.epochs
    }

    pub fn data(&self) -> &DenseMatrix {
        &self.data
    }
}

impl DataSource for MatrixSource {
    fn dim(&self) -> usize {
        self.data.cols()
    }

    fn next_batch(&mut self, batch: usize) -> Result<DenseMatrix> {
        let n = self.data.cols();
        let mut out = Vec::with_capacity(batch * n);
        for _ in 0..batch {
            if self.cursor == self.order.len() {
                self.reshuffle();
            }
            out.extend_from_slice(self.data.row(self.order[self.cursor]));
            self.cursor += 1;
        }
        DenseMatrix::from_vec(batch, n, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wraps_around_with_every_row_once_per_pass() {
        let data = DenseMatrix::from_fn(5, 1, |r, _| r as f64);
        let mut s = MatrixSource::new(data, RngStream::new(1)).unwrap();
        let first = s.next_batch(5).unwrap();
        let mut seen: Vec<f64> = first.as_slice().to_vec();
        seen.sort_by(f64::total_cmp);
        assert_eq!(seen, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        let more = s.next_batch(7).unwrap();
        assert_eq!(more.rows(), 7);
        assert_eq!(s.epochs(), 3);
    }

    #[test]
    fn empty_source_rejected() {
        assert!(MatrixSource::new(DenseMatrix::zeros(0, 3), RngStream::new(0)).is_err());
    }
}
