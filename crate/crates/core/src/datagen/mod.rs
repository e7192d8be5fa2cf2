//! Synthetic superposition data with known ground truth, and activation file I/O.

mod actfile;
mod world;

pub use actfile::{decode_activations, encode_activations, read_activations, write_activations, ACTIVATION_MAGIC};
pub use world::{CompositePair, HierarchyEdge, SparseCodes, SyntheticWorld, WorldSpec};

use crate::error::Result;
use crate::numerics::{DenseMatrix, RngStream};
use crate::trainer::DataSource;

/// Batches sampled on the fly from a world; never exhausts.
#[derive(Debug, Clone)]
pub struct SyntheticSource {
    pub world: SyntheticWorld,
    rng: RngStream,
}

impl SyntheticSource {
    pub fn new(world: SyntheticWorld, rng: RngStream) -> Self {
        Self { world, rng }
    }
}

impl DataSource for SyntheticSource {
    fn dim(&self) -> usize {
        self.world.dim_n
    }

    fn next_batch(&mut self, batch: usize) -> Result<DenseMatrix> {
        Ok(self.world.sample_batch(batch, &mut self.rng).0)
    }
}
