//! Training loop: Adam updates, dead-latent tracking, the auxiliary loss,
//! periodic orthogonality, checkpoints and the metrics log.

mod adam;
mod checkpoint;
mod config;
mod log;
mod source;
mod state;

use std::path::Path;
use std::time::{Duration, Instant};

pub use adam::{adam_step, project_decoder_gradient, AdamConfig, AdamState};
pub use checkpoint::{Checkpoint, CheckpointMeta, CHECKPOINT_MAGIC};
pub(crate) use checkpoint::Reader;
pub use config::TrainConfig;
pub use log::{metrics_csv, parse_metrics_csv, write_metrics_csv, MetricsRow, METRICS_HEADER};
pub use source::{DataSource, MatrixSource};
pub use state::TrainState;

use crate::error::{Error, Result};
use crate::numerics::{streams, DenseMatrix, RngStream};
use crate::sae::{aux_reconstruction, backward_timed, forward, loss, ForwardTrace, LossBreakdown, Mode, SaeConfig, SaeParams};

/// Auxiliary loss for a forward trace: mean squared error of re-fitting the
/// residual with the top `aux_k` dead latents. Zero when nothing is dead.
pub fn aux_loss(
    params: &SaeParams,
    cfg: &SaeConfig,
    x: &DenseMatrix,
    trace: &ForwardTrace,
    dead_mask: &[bool],
) -> Result<f64> {
    Ok(aux_reconstruction(params, cfg, x, trace, dead_mask)?.map_or(0.0, |a| a.value))
}

/// What one optimizer step observed, evaluated before its update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: u64,
    pub loss: LossBreakdown,
    pub l0: f64,
    pub dead: usize,
}

impl StepRecord {
    pub fn row(&self) -> MetricsRow {
        MetricsRow {
            step: self.step,
            mse: self.loss.mse,
            l0: self.l0,
            ortho: self.loss.ortho,
            dead: self.dead,
            total: self.loss.total,
        }
    }
}

/// Accumulated wall time, split by orthogonality work and everything else.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Timing {
    pub total: Duration,
    pub ortho: Duration,
}

impl Timing {
    /// Fraction of step time spent on the orthogonality term.
    pub fn ortho_share(&self) -> f64 {
        if self.total.is_zero() {
            0.0
        } else {
            self.ortho.as_secs_f64() / self.total.as_secs_f64()
        }
    }
}

/// One training run: parameters, optimizer state and configuration.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub sae: SaeConfig,
    pub train: TrainConfig,
    pub params: SaeParams,
    pub state: TrainState,
    pub timing: Timing,
}

impl Trainer {
    /// Fresh parameters for an `n`-dimensional input with `m` latents.
    pub fn new(n: usize, m: usize, sae: SaeConfig, train: TrainConfig) -> Result<Self> {
        let mut rng = RngStream::derive(train.seed, streams::INIT);
        let params = SaeParams::init(n, m, &mut rng);
        Self::from_params(params, sae, train)
    }

    pub fn from_params(params: SaeParams, sae: SaeConfig, train: TrainConfig) -> Result<Self> {
        params.check()?;
        sae.validate(params.m())?;
        train.validate()?;
        let state = TrainState::new(params.n(), params.m(), train.seed);
        Ok(Self {
            sae,
            train,
            params,
            state,
            timing: Timing::default(),
        })
    }

    fn adam_config(&self) -> AdamConfig {
        AdamConfig {
            beta1: self.train.adam_beta1,
            beta2: self.train.adam_beta2,
            eps: self.train.adam_eps,
            weight_decay: self.train.weight_decay,
        }
    }

    /// Dead mask the next step will use.
    pub fn dead_mask(&self) -> Vec<bool> {
        self.state.dead_mask(self.state.step() + 1, self.train.dead_window)
    }

    /// Partition stream for the step about to run.
    pub fn partition_rng(&self, step: u64) -> RngStream {
        RngStream::for_step(self.state.seed, streams::PARTITION, step)
    }

    /// Evaluates the objective on `x` as the next step would, without updating anything.
    pub fn evaluate(&self, x: &DenseMatrix) -> Result<LossBreakdown> {
        let step = self.state.step() + 1;
        let trace = forward(&self.params, &self.sae, x)?;
        let dead = self.dead_mask();
        let out = loss(
            &self.params,
            &self.sae,
            x,
            &trace,
            step,
            &mut self.partition_rng(step),
            (self.sae.alpha > 0.0).then_some(dead.as_slice()),
        )?;
        Ok(out.breakdown)
    }

    /// Forward, loss, backward and one Adam update on `x`.
    pub fn step(&mut self, x: &DenseMatrix) -> Result<StepRecord> {
        let started = Instant::now();
        let step = self.state.step() + 1;
        let trace = forward(&self.params, &self.sae, x)?;
        let dead = self.dead_mask();
        let dead_count = dead.iter().filter(|&&d| d).count();
        let out = loss(
            &self.params,
            &self.sae,
            x,
            &trace,
            step,
            &mut self.partition_rng(step),
            (self.sae.alpha > 0.0).then_some(dead.as_slice()),
        )?;
        if !out.breakdown.total.is_finite() {
            return Err(Error::NonFinite(format!("loss at step {step}")));
        }
        let (grads, ortho_back) = backward_timed(&self.params, &self.sae, x, &trace, &out)?;
        let unit_norm = self.sae.mode == Mode::ReluL1;
        let adam = self.adam_config();
        adam_step(
            &mut self.state.adam,
            &mut self.params,
            &grads,
            self.train.learning_rate,
            &adam,
            unit_norm,
        )?;

        for r in 0..trace.batch() {
            for j in trace.active_in_row(r) {
                self.state.last_fired[j] = step;
            }
        }

        self.timing.ortho += out.ortho_time + ortho_back;
        self.timing.total += started.elapsed();
        Ok(StepRecord {
            step,
            loss: out.breakdown,
            l0: trace.mean_l0(),
            dead: dead_count,
        })
    }

    /// Runs until `total_steps` updates have been made, calling `on_step` after each one.
    pub fn run_with(
        &mut self,
        source: &mut dyn DataSource,
        mut on_step: impl FnMut(&Trainer, &StepRecord) -> Result<()>,
    ) -> Result<Vec<MetricsRow>> {
        if source.dim() != self.params.n() {
            return Err(Error::shape("train", format!("data of width {}", self.params.n()), source.dim()));
        }
        let mut log = Vec::new();
        while self.state.step() < self.train.total_steps {
            let batch = source.next_batch(self.train.batch_size)?;
            let rec = self.step(&batch)?;
            if rec.step % self.train.log_every == 0 || rec.step == self.train.total_steps {
                log.push(rec.row());
            }
            on_step(self, &rec)?;
        }
        Ok(log)
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            params: self.params.clone(),
            meta: CheckpointMeta {
                sae: self.sae.clone(),
                train: Some(self.train.clone()),
                step: self.state.step(),
                seed: self.state.seed,
            },
        }
    }
}

/// Result of a completed run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: SaeParams,
    pub state: TrainState,
    pub log: Vec<MetricsRow>,
    pub timing: Timing,
    pub checkpoint: Checkpoint,
}

fn finish(trainer: Trainer, log: Vec<MetricsRow>) -> TrainOutcome {
    let checkpoint = trainer.checkpoint();
    TrainOutcome {
        params: trainer.params,
        state: trainer.state,
        log,
        timing: trainer.timing,
        checkpoint,
    }
}

/// Trains a fresh SAE whose latent count is `m` on batches from `source`.
pub fn train(source: &mut dyn DataSource, m: usize, sae: &SaeConfig, cfg: &TrainConfig) -> Result<TrainOutcome> {
    let mut trainer = Trainer::new(source.dim(), m, sae.clone(), cfg.clone())?;
    let log = trainer.run_with(source, |_, _| Ok(()))?;
    Ok(finish(trainer, log))
}

pub const CHECKPOINT_FILE: &str = "checkpoint.saeckpt";
pub const METRICS_FILE: &str = "metrics.csv";

/// [`train`], writing `checkpoint.saeckpt`, `metrics.csv` and any intermediate
/// `step_<N>.saeckpt` files into `dir`.
pub fn train_to_dir(
    source: &mut dyn DataSource,
    m: usize,
    sae: &SaeConfig,
    cfg: &TrainConfig,
    dir: impl AsRef<Path>,
) -> Result<TrainOutcome> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut trainer = Trainer::new(source.dim(), m, sae.clone(), cfg.clone())?;
    let every = cfg.checkpoint_every;
    let log = trainer.run_with(source, |t, rec| {
        if every > 0 && rec.step % every == 0 && rec.step != t.train.total_steps {
            t.checkpoint().save(dir.join(format!("step_{:06}.saeckpt", rec.step)))?;
        }
        Ok(())
    })?;
    let outcome = finish(trainer, log);
    outcome.checkpoint.save(dir.join(CHECKPOINT_FILE))?;
    write_metrics_csv(dir.join(METRICS_FILE), &outcome.log)?;
    Ok(outcome)
}
