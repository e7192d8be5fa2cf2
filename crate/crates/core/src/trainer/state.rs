use crate::trainer::adam::AdamState;

/// Mutable optimizer state owned by one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub adam: AdamState,
    /// Step at which each latent last fired; 0 means never.
    pub last_fired: Vec<u64>,
    pub seed: u64,
}

impl TrainState {
    pub fn new(n: usize, m: usize, seed: u64) -> Self {
        Self {
            adam: AdamState::new(n, m),
            last_fired: vec![0; m],
            seed,
        }
    }

    /// Completed optimizer updates.
    pub fn step(&self) -> u64 {
        self.adam.step
    }

    /// Latents that have not fired in the last `window` steps, as seen from `step`.
    pub fn dead_mask(&self, step: u64, window: u64) -> Vec<bool> {
        self.last_fired
            .iter()
            .map(|&last| step.saturating_sub(last) > window)
            .collect()
    }

    pub fn dead_count(&self, step: u64, window: u64) -> usize {
        self.dead_mask(step, window).iter().filter(|&&d| d).count()
    }
}
