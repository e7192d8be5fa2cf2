//! Dense linear algebra, selection, and deterministic randomness.

mod matrix;
mod rng;
mod select;

pub use matrix::{dot, norm, DenseMatrix};
pub use rng::{streams, RngStream};
pub use select::{row_variance_total, topk_indices};
