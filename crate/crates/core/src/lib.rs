//! Pool-based batch active deep learning for spatio-temporal electric load
//! prediction.
//!
//! The crate is organised bottom-up:
//!
//! - [`nn`]: a small feed-forward engine (dense and 1-D convolution layers,
//!   mean-squared-error loss, minibatch SGD with early stopping).
//! - [`embedding`]: the multi-encoder embedding network built on top of [`nn`].
//! - [`selection`]: K-means++ clustering of embedded candidates, the Laplacian
//!   embedding-uncertainty score and the per-cluster query variants.
//! - [`engine`]: the budgeted query loop, the passive baseline, usage metrics
//!   and sequence replay.
//! - [`dataset`]: feature/label schema, synthetic generator, splits and
//!   normalization.
//! - [`forest`]: the multi-output random-forest baseline.
//! - [`harness`]: config parsing, single runs, the full experiment grid and
//!   the replay comparison used by the `adl` binary.

pub mod dataset;
pub mod embedding;
pub mod engine;
mod error;
pub mod forest;
pub mod harness;
pub mod nn;
pub mod seed;
pub mod selection;

pub use error::{Error, Result};
