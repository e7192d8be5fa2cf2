//! Sparse autoencoder training and analysis with a chunk-wise decoder
//! orthogonality penalty.
//!
//! Modules, bottom-up:
//! - [`numerics`]: dense matrices, top-k selection, deterministic RNG
//! - [`sae`]: parameters, forward pass, objective terms, analytic gradients
//! - [`trainer`]: Adam loop, dead-latent tracking, checkpoints, metrics log
//! - [`datagen`]: synthetic superposition worlds and activation files
//! - [`metrics`]: fidelity and atomicity measurements
//! - [`metasae`]: composition rate via a secondary SAE on decoder columns
//!
//! The `ortsae` binary wraps these in `gen-data`, `train`, `eval`, `metasae`,
//! `decompose` and `compare` subcommands.

pub mod error;
pub mod numerics;
pub mod sae;
pub mod trainer;
pub mod datagen;
pub mod metrics;
pub mod metasae;

pub use error::{Error, FormatError, Result};
