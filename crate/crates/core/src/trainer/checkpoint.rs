//! `SAECKPT1` checkpoint format.
//!
//! ```text
//! "SAECKPT1"              8 bytes
//! n, m                    u32 LE each
//! mode tag                u8
//! W_enc (m x n), b_enc (m), W_dec (n x m), b_dec (n)
//!                         f32 LE, row-major
//! metadata length         u32 LE
//! metadata                UTF-8 JSON
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, FormatError, Result};
use crate::numerics::DenseMatrix;
use crate::sae::{Mode, SaeConfig, SaeParams};
use crate::trainer::TrainConfig;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"SAECKPT1";
const HEADER_LEN: usize = 8 + 4 + 4 + 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub sae: SaeConfig,
    #[serde(default)]
    pub train: Option<TrainConfig>,
    pub step: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: SaeParams,
    pub meta: CheckpointMeta,
}

impl Checkpoint {
    pub fn mode(&self) -> Mode {
        self.meta.sae.mode
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let p = &self.params;
        p.check()?;
        let (n, m) = (p.n(), p.m());
        let dims = |v: usize, key: &'static str| {
            u32::try_from(v).map_err(|_| Error::config(key, format!("{v} does not fit in 32 bits")))
        };
        let meta = serde_json::to_vec(&self.meta)
            .map_err(|e| Error::config("metadata", e.to_string()))?;
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * p.len() + 4 + meta.len());
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&dims(n, "n")?.to_le_bytes());
        out.extend_from_slice(&dims(m, "m")?.to_le_bytes());
        out.push(self.mode().tag());
        for block in p.blocks() {
            for &v in block {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        out.extend_from_slice(&dims(meta.len(), "metadata")?.to_le_bytes());
        out.extend_from_slice(&meta);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, FormatError> {
        let mut r = Reader { bytes, pos: 0 };
        if bytes.len() < CHECKPOINT_MAGIC.len() || &bytes[..8] != CHECKPOINT_MAGIC {
            return Err(FormatError::BadMagic {
                offset: 0,
                expected: "SAECKPT1",
            });
        }
        r.pos = 8;
        let n = r.u32()? as u64;
        let m = r.u32()? as u64;
        let tag_offset = r.pos;
        let tag = r.take(1)?[0];
        let mode = Mode::from_tag(tag).ok_or(FormatError::BadModeTag { offset: tag_offset, tag })?;

        let overflow = FormatError::DimensionOverflow {
            offset: 8,
            rows: n,
            cols: m,
        };
        let weights = n.checked_mul(m).ok_or(overflow.clone())?;
        let total = weights
            .checked_mul(2)
            .and_then(|w| w.checked_add(n + m))
            .and_then(|v| v.checked_mul(4))
            .and_then(|v| usize::try_from(v).ok())
            .ok_or(overflow)?;
        let (n, m) = (n as usize, m as usize);
        let payload = r.take(total)?;
        let mut floats = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64);
        let mut next = |len: usize| floats.by_ref().take(len).collect::<Vec<f64>>();
        let w_enc = next(m * n);
        let b_enc = next(m);
        let w_dec = next(n * m);
        let b_dec = next(n);

        let meta_len = r.u32()? as usize;
        let meta_offset = r.pos;
        let meta_bytes = r.take(meta_len)?;
        let text = std::str::from_utf8(meta_bytes).map_err(|e| FormatError::BadMetadata {
            offset: meta_offset + e.valid_up_to(),
            reason: "metadata is not valid UTF-8".into(),
        })?;
        let meta: CheckpointMeta = serde_json::from_str(text).map_err(|e| FormatError::BadMetadata {
            offset: meta_offset,
            reason: e.to_string(),
        })?;
        if meta.sae.mode != mode {
            return Err(FormatError::BadMetadata {
                offset: meta_offset,
                reason: format!("header mode {mode:?} disagrees with metadata mode {:?}", meta.sae.mode),
            });
        }
        if r.pos != bytes.len() {
            return Err(FormatError::TrailingBytes {
                offset: r.pos,
                extra: bytes.len() - r.pos,
            });
        }
        // lengths were checked above, so these shapes always agree
        let params = SaeParams {
            w_enc: DenseMatrix::from_vec(m, n, w_enc).expect("sized"),
            b_enc,
            w_dec: DenseMatrix::from_vec(n, m, w_dec).expect("sized"),
            b_dec,
        };
        Ok(Self { params, meta })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_bytes(&bytes)?)
    }
}

pub(crate) struct Reader<'a> {
    pub bytes: &'a [u8],
    pub pos: usize,
}

impl<'a> Reader<'a> {
    pub fn take(&mut self, len: usize) -> Result<&'a [u8], FormatError> {
        let available = self.bytes.len() - self.pos;
        if len > available {
            return Err(FormatError::Truncated {
                offset: self.pos,
                needed: len,
                available,
            });
        }
        let s = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(s)
    }

    pub fn u32(&mut self) -> Result<u32, FormatError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}
