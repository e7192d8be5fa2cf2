//! Flat JSON run configuration.

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use ortsae::sae::{Mode, SaeConfig};
use ortsae::trainer::TrainConfig;
use ortsae::Error;

pub const SEED_ENV: &str = "ORTSAE_SEED";

/// Every model and training field at top level, plus the latent count `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub m: usize,
    pub mode: Mode,
    pub k_sparsity: usize,
    pub lambda: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub delta: f64,
    pub chunk_count: usize,
    pub penalty_period: usize,
    pub aux_k: Option<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub total_steps: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub weight_decay: f64,
    pub dead_window: u64,
    pub seed: u64,
    pub checkpoint_every: u64,
    pub log_every: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::from_parts(128, &SaeConfig::default(), &TrainConfig::default())
    }
}

impl RunConfig {
    pub fn from_parts(m: usize, s: &SaeConfig, t: &TrainConfig) -> Self {
        Self {
            m,
            mode: s.mode,
            k_sparsity: s.k_sparsity,
            lambda: s.lambda,
            alpha: s.alpha,
            gamma: s.gamma,
            delta: s.delta,
            chunk_count: s.chunk_count,
            penalty_period: s.penalty_period,
            aux_k: s.aux_k,
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
            total_steps: t.total_steps,
            adam_beta1: t.adam_beta1,
            adam_beta2: t.adam_beta2,
            adam_eps: t.adam_eps,
            weight_decay: t.weight_decay,
            dead_window: t.dead_window,
            seed: t.seed,
            checkpoint_every: t.checkpoint_every,
            log_every: t.log_every,
        }
    }

    pub fn sae(&self) -> SaeConfig {
        SaeConfig {
            mode: self.mode,
            k_sparsity: self.k_sparsity,
            lambda: self.lambda,
            alpha: self.alpha,
            gamma: self.gamma,
            delta: self.delta,
            chunk_count: self.chunk_count,
            penalty_period: self.penalty_period,
            aux_k: self.aux_k,
        }
    }

    pub fn train(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            total_steps: self.total_steps,
            adam_beta1: self.adam_beta1,
            adam_beta2: self.adam_beta2,
            adam_eps: self.adam_eps,
            weight_decay: self.weight_decay,
            dead_window: self.dead_window,
            seed: self.seed,
            checkpoint_every: self.checkpoint_every,
            log_every: self.log_every,
        }
    }

    /// Parses a JSON object; unknown or ill-typed keys are reported by name.
    pub fn parse(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).context("config is not valid JSON")?;
        let Value::Object(map) = value else {
            bail!("config must be a JSON object");
        };
        let known = serde_json::to_value(Self::default())?;
        let known = known.as_object().expect("struct serializes to an object");
        for (key, v) in &map {
            if !known.contains_key(key) {
                bail!("unknown config key `{key}`");
            }
            let mut one = Map::new();
            one.insert(key.clone(), v.clone());
            serde_json::from_value::<Self>(Value::Object(one))
                .map_err(|e| anyhow!("invalid config key `{key}`: {e}"))?;
        }
        let cfg: Self = serde_json::from_value(Value::Object(map))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.m == 0 {
            return Err(Error::Config {
                key: "m",
                reason: "must be >= 1".into(),
            });
        }
        self.sae().validate(self.m)?;
        self.train().validate()
    }
}

/// Seed from the environment, if set.
pub fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| anyhow!("invalid `{SEED_ENV}`: {v:?} is not an unsigned integer")),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(anyhow!("invalid `{SEED_ENV}`: {e}")),
    }
}
