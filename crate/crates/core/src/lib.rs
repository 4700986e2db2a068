//! Post-hoc out-of-distribution scoring over transformer hidden states.
//!
//! The crate is `no_std` (with `alloc`) and carries no IO. It covers:
//!
//! - [`dump`]: in-memory hidden-state records and their invariants,
//! - [`pooling`]: intra-layer token pooling and inter-layer combination
//!   (token-averaged, layer-averaged "Avg-Avg" embeddings and friends),
//! - [`detectors`]: Mahalanobis, per-layer score ensemble, MSP, energy and LOF,
//! - [`metrics`]: AUROC, FAR95 and macro averaging.
//!
//! File formats, manifests and the CLI live in the `layerood` crate.

#![no_std]

extern crate alloc;

pub mod detectors;
pub mod dump;
mod error;
pub mod metrics;
pub mod pooling;

pub use error::CoreError;

/// Result alias used throughout the crate.
pub type Result<T, E = CoreError> = core::result::Result<T, E>;
