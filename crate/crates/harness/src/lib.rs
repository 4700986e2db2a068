//! Benchmark harness around `layerood-core`: HSD dump IO, the Gaussian model
//! sidecar, run manifests, synthetic data and the `layerood` CLI.

pub mod bench;
mod error;
pub mod hsd;
pub mod inspect;
pub mod manifest;
pub mod model_file;
pub mod report;
pub mod synth;

pub use error::HarnessError;
