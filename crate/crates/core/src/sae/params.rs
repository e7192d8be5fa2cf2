use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, RngStream};

/// Encoder and decoder weights.
///
/// `w_enc` is `m x n`, `w_dec` is `n x m`; decoder column `j` is the direction of latent `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SaeParams {
    pub w_enc: DenseMatrix,
    pub b_enc: Vec<f64>,
    pub w_dec: DenseMatrix,
    pub b_dec: Vec<f64>,
}

/// Gradients share the parameter layout.
pub type Gradients = SaeParams;

impl SaeParams {
    pub fn new(w_enc: DenseMatrix, b_enc: Vec<f64>, w_dec: DenseMatrix, b_dec: Vec<f64>) -> Result<Self> {
        let p = Self {
            w_enc,
            b_enc,
            w_dec,
            b_dec,
        };
        p.check()?;
        Ok(p)
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            w_enc: DenseMatrix::zeros(m, n),
            b_enc: vec![0.0; m],
            w_dec: DenseMatrix::zeros(n, m),
            b_dec: vec![0.0; n],
        }
    }

    /// Gaussian decoder columns normalized to unit length, encoder tied to the decoder transpose, zero biases.
    pub fn init(n: usize, m: usize, rng: &mut RngStream) -> Self {
        let mut w_dec_t = DenseMatrix::from_fn(m, n, |_, _| rng.standard_normal());
        for j in 0..m {
            let row = w_dec_t.row_mut(j);
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|v| *v /= norm);
            }
        }
        Self {
            w_dec: w_dec_t.transpose(),
            w_enc: w_dec_t,
            b_enc: vec![0.0; m],
            b_dec: vec![0.0; n],
        }
    }

    /// Input dimension.
    pub fn n(&self) -> usize {
        self.w_enc.cols()
    }

    /// Latent count.
    pub fn m(&self) -> usize {
        self.w_enc.rows()
    }

    pub fn check(&self) -> Result<()> {
        let (m, n) = self.w_enc.shape();
        if self.w_dec.shape() != (n, m) {
            return Err(Error::shape(
                "SaeParams",
                format!("w_dec {n}x{m}"),
                format!("{:?}", self.w_dec.shape()),
            ));
        }
        if self.b_enc.len() != m {
            return Err(Error::shape("SaeParams", format!("b_enc of length {m}"), self.b_enc.len()));
        }
        if self.b_dec.len() != n {
            return Err(Error::shape("SaeParams", format!("b_dec of length {n}"), self.b_dec.len()));
        }
        Ok(())
    }

    /// The four parameter blocks in a fixed order: `w_enc`, `b_enc`, `w_dec`, `b_dec`.
    pub fn blocks(&self) -> [&[f64]; 4] {
        [
            self.w_enc.as_slice(),
            &self.b_enc,
            self.w_dec.as_slice(),
            &self.b_dec,
        ]
    }

    pub fn blocks_mut(&mut self) -> [&mut [f64]; 4] {
        [
            self.w_enc.as_mut_slice(),
            &mut self.b_enc,
            self.w_dec.as_mut_slice(),
            &mut self.b_dec,
        ]
    }

    pub fn len(&self) -> usize {
        self.blocks().iter().map(|b| b.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_finite(&self) -> bool {
        self.blocks().iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    /// Flat coordinate accessors, in `blocks()` order.
    pub fn get_flat(&self, mut i: usize) -> f64 {
        for b in self.blocks() {
            if i < b.len() {
                return b[i];
            }
            i -= b.len();
        }
        panic!("flat index out of range");
    }

    pub fn set_flat(&mut self, mut i: usize, v: f64) {
        for b in self.blocks_mut() {
            if i < b.len() {
                b[i] = v;
                return;
            }
            i -= b.len();
        }
        panic!("flat index out of range");
    }

    /// Rescales every decoder column to unit norm. Zero columns are left untouched.
    pub fn normalize_decoder(&mut self) {
        let norms = self.w_dec.column_norms();
        let m = self.m();
        for r in 0..self.n() {
            let row = self.w_dec.row_mut(r);
            for j in 0..m {
                if norms[j] > 0.0 {
                    row[j] /= norms[j];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_tied_and_unit_norm() {
        let mut rng = RngStream::new(4);
        let p = SaeParams::init(6, 10, &mut rng);
        assert_eq!(p.w_enc, p.w_dec.transpose());
        for norm in p.w_dec.column_norms() {
            assert!((norm - 1.0).abs() < 1e-12);
        }
        assert!(p.b_enc.iter().chain(&p.b_dec).all(|&b| b == 0.0));
        assert_eq!((p.n(), p.m(), p.len()), (6, 10, 6 * 10 * 2 + 16));
    }

    #[test]
    fn rejects_inconsistent_shapes() {
        let r = SaeParams::new(
            DenseMatrix::zeros(4, 2),
            vec![0.0; 4],
            DenseMatrix::zeros(2, 3),
            vec![0.0; 2],
        );
        assert!(matches!(r, Err(Error::Shape { .. })));
    }

    #[test]
    fn flat_access() {
        let mut p = SaeParams::zeros(2, 3);
        p.set_flat(6, 1.5);
        assert_eq!(p.b_enc[0], 1.5);
        assert_eq!(p.get_flat(6), 1.5);
    }
}
