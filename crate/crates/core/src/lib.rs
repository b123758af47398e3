//! Class-conditional progressive style-based GAN toolkit.
//!
//! The pipeline runs in five stages, each in its own module:
//!
//! - [`dataset`]: ingest images, filter text-heavy logos, build the
//!   resolution pyramid, sample batches.
//! - [`labels`]: synthesize class-conditions by clustering word-vector or
//!   image-feature embeddings.
//! - [`model`]: the conditional mapping network, style-modulated generator,
//!   progressive critic, and WGAN-GP losses.
//! - [`train`]: the progressive schedule, training loop, checkpoints and
//!   sample grids.
//! - [`eval`]: FID, Inception Score, truncation and per-class diversity.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod imaging;
pub mod labels;
pub mod model;
pub mod rng;
pub mod train;

pub use error::{Error, Result};
