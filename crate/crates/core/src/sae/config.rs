use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Latent activation rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// ReLU latents with an L1 penalty and unit-norm decoder columns.
    ReluL1,
    /// Per-example top-k after ReLU.
    TopK,
    /// Top `B * k` entries across the whole batch after ReLU.
    BatchTopK,
}

impl Mode {
    /// Single-byte tag used by the checkpoint format.
    pub fn tag(self) -> u8 {
        match self {
            Mode::ReluL1 => 0,
            Mode::TopK => 1,
            Mode::BatchTopK => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Mode::ReluL1),
            1 => Some(Mode::TopK),
            2 => Some(Mode::BatchTopK),
            _ => None,
        }
    }
}

pub const DEFAULT_DELTA: f64 = 1e-8;

/// Model and objective hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SaeConfig {
    pub mode: Mode,
    /// Target L0 for the top-k family.
    pub k_sparsity: usize,
    /// L1 coefficient; must be zero for the top-k family.
    pub lambda: f64,
    /// Auxiliary dead-latent loss coefficient.
    pub alpha: f64,
    /// Orthogonality coefficient.
    pub gamma: f64,
    /// Denominator floor in the cosine similarity.
    pub delta: f64,
    pub chunk_count: usize,
    /// The orthogonality term is evaluated every `penalty_period` steps with weight `gamma * penalty_period`.
    pub penalty_period: usize,
    /// Dead latents used by the auxiliary reconstruction. `None` resolves to `min(2k, m/2)`.
    pub aux_k: Option<usize>,
}

impl Default for SaeConfig {
    fn default() -> Self {
        Self {
            mode: Mode::BatchTopK,
            k_sparsity: 8,
            lambda: 0.0,
            alpha: 1.0 / 32.0,
            gamma: 0.0,
            delta: DEFAULT_DELTA,
            chunk_count: 1,
            penalty_period: 1,
            aux_k: None,
        }
    }
}

impl SaeConfig {
    /// Orthogonal SAE defaults: BatchTopK with `gamma = 0.25`.
    pub fn ortsae(k_sparsity: usize, chunk_count: usize) -> Self {
        Self {
            k_sparsity,
            chunk_count,
            gamma: 0.25,
            ..Self::default()
        }
    }

    pub fn batch_topk(k_sparsity: usize) -> Self {
        Self {
            k_sparsity,
            ..Self::default()
        }
    }

    /// Chunk count used at scale: one chunk per 8192 latents, rounded up.
    pub fn chunks_for(m: usize) -> usize {
        m.div_ceil(8192).max(1)
    }

    pub fn resolved_aux_k(&self, m: usize) -> usize {
        self.aux_k.unwrap_or_else(|| (2 * self.k_sparsity).min(m / 2)).min(m)
    }

    /// Weight applied to the orthogonality term on steps where it is evaluated.
    pub fn gamma_effective(&self) -> f64 {
        self.gamma * self.penalty_period as f64
    }

    pub fn ortho_scheduled(&self, step: u64) -> bool {
        self.gamma > 0.0 && step.is_multiple_of(self.penalty_period as u64)
    }

    /// Checks every constraint against a dictionary of `m` latents.
    pub fn validate(&self, m: usize) -> Result<()> {
        if m == 0 {
            return Err(Error::config("m", "latent count must be positive"));
        }
        let finite_nonneg = |key: &'static str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::config(key, format!("must be finite and >= 0, got {v}")))
            }
        };
        finite_nonneg("lambda", self.lambda)?;
        finite_nonneg("alpha", self.alpha)?;
        finite_nonneg("gamma", self.gamma)?;
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::config("delta", format!("must be > 0, got {}", self.delta)));
        }
        match self.mode {
            Mode::TopK | Mode::BatchTopK => {
                if self.lambda != 0.0 {
                    return Err(Error::config(
                        "lambda",
                        "must be 0 for top-k modes; sparsity comes from selection",
                    ));
                }
                if self.k_sparsity == 0 {
                    return Err(Error::config("k_sparsity", "must be >= 1 for top-k modes"));
                }
            }
            Mode::ReluL1 => {}
        }
        if self.k_sparsity > m {
            return Err(Error::config(
                "k_sparsity",
                format!("{} exceeds latent count {m}", self.k_sparsity),
            ));
        }
        if self.chunk_count == 0 || self.chunk_count > m {
            return Err(Error::config(
                "chunk_count",
                format!("must be in 1..={m}, got {}", self.chunk_count),
            ));
        }
        if !m.is_multiple_of(self.chunk_count) {
            return Err(Error::config(
                "chunk_count",
                format!("latent count {m} is not divisible by {}", self.chunk_count),
            ));
        }
        if self.gamma > 0.0 && m / self.chunk_count < 2 {
            return Err(Error::config(
                "chunk_count",
                format!("chunks of {} latent(s) have no pairs", m / self.chunk_count),
            ));
        }
        if self.penalty_period == 0 {
            return Err(Error::config("penalty_period", "must be >= 1"));
        }
        if let Some(k) = self.aux_k {
            if k > m {
                return Err(Error::config("aux_k", format!("{k} exceeds latent count {m}")));
            }
        }
        Ok(())
    }
}
