//! Core library for robust untrained-prior recovery of corrupted time
//! series: a minimal reverse-mode compute core, the hierarchical 1D prior
//! network, robust objectives, degradation operators, corruption scenario
//! generators, classical baselines, metrics, and data utilities.

pub mod autodiff;
pub mod baselines;
pub mod corruption;
pub mod data;
pub mod diagnostics;
pub mod error;
pub mod metrics;
pub mod net;
pub mod operators;
pub mod rng;
pub mod robust;
pub mod solver;
pub mod tensor;

pub use error::{CoreError, Result};
pub use rng::RngStream;
pub use tensor::TensorBuf;
