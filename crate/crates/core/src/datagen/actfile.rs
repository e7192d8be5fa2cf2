//! `SAEACT1` activation files.
//!
//! ```text
//! "SAEACT1\0"     8 bytes
//! n_rows, n_cols  u32 LE each
//! payload         n_rows * n_cols f32 LE, row-major
//! ```

use std::path::Path;

use crate::error::{Error, FormatError, Result};
use crate::numerics::DenseMatrix;
use crate::trainer::Reader;

pub const ACTIVATION_MAGIC: &[u8; 8] = b"SAEACT1\0";

pub fn encode_activations(x: &DenseMatrix) -> Result<Vec<u8>> {
    let dim = |v: usize, key: &'static str| {
        u32::try_from(v).map_err(|_| Error::config(key, format!("{v} does not fit in 32 bits")))
    };
    let mut out = Vec::with_capacity(16 + 4 * x.as_slice().len());
    out.extend_from_slice(ACTIVATION_MAGIC);
    out.extend_from_slice(&dim(x.rows(), "n_rows")?.to_le_bytes());
    out.extend_from_slice(&dim(x.cols(), "n_cols")?.to_le_bytes());
    for &v in x.as_slice() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    Ok(out)
}

pub fn decode_activations(bytes: &[u8]) -> Result<DenseMatrix, FormatError> {
    if bytes.len() < ACTIVATION_MAGIC.len() || &bytes[..8] != ACTIVATION_MAGIC {
        return Err(FormatError::BadMagic {
            offset: 0,
            expected: "SAEACT1\\0",
        });
    }
    let mut r = Reader { bytes, pos: 8 };
    let rows = r.u32()? as u64;
    let cols = r.u32()? as u64;
    let len = rows
        .checked_mul(cols)
        .and_then(|v| v.checked_mul(4))
        .and_then(|v| usize::try_from(v).ok())
        .ok_or(FormatError::DimensionOverflow { offset: 8, rows, cols })?;
    let payload = r.take(len)?;
    if r.pos != bytes.len() {
        return Err(FormatError::TrailingBytes {
            offset: r.pos,
            extra: bytes.len() - r.pos,
        });
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Ok(DenseMatrix::from_vec(rows as usize, cols as usize, data).expect("sized"))
}

pub fn write_activations(path: impl AsRef<Path>, x: &DenseMatrix) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_activations(x)?).map_err(|e| Error::io(path, e))
}

pub fn read_activations(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(decode_activations(&bytes)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;

    #[test]
    fn file_round_trip() {
        let mut rng = RngStream::new(1);
        let x = DenseMatrix::from_fn(7, 5, |_, _| rng.standard_normal());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.bin");
        write_activations(&path, &x).unwrap();
        let back = read_activations(&path).unwrap();
        assert_eq!(back, x.map(|v| v as f32 as f64));
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 16 + 7 * 5 * 4);
    }

    #[test]
    fn empty_file_is_bad_magic() {
        assert!(matches!(decode_activations(&[]), Err(FormatError::BadMagic { offset: 0, .. })));
    }

    #[test]
    fn short_payload_is_truncated() {
        let mut bytes = encode_activations(&DenseMatrix::zeros(2, 2)).unwrap();
        bytes[8..12].copy_from_slice(&5u32.to_le_bytes());
        assert_eq!(
            decode_activations(&bytes),
            Err(FormatError::Truncated { offset: 16, needed: 40, available: 16 })
        );
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(read_activations("/nonexistent/x.bin"), Err(Error::Io { .. })));
    }
}
