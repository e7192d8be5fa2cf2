//! Sparse autoencoder model: parameters, forward pass, objective, and gradients.

mod aux;
mod backward;
mod config;
mod forward;
mod loss;
mod ortho;
mod params;

pub use aux::{aux_reconstruction, AuxTrace};
pub use backward::{backward, backward_timed};
pub use config::{Mode, SaeConfig, DEFAULT_DELTA};
pub use forward::{decode, encode, forward, Encoding, ForwardTrace};
pub use loss::{loss, LossBreakdown, LossOutput};
pub use ortho::{cosine_sim, ortho_penalty_chunked, ortho_penalty_full, ortho_penalty_on, OrthoPartition};
pub use params::{Gradients, SaeParams};
