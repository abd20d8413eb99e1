//! STFT-KAN layers and the liteDGCNN point-cloud classifier.

// Range checks are written `!(x > 0.0)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod convergence;
pub mod data;
pub mod error;
pub mod fourier_kan;
pub mod gradcheck;
pub mod graph;
pub mod model;
pub mod ndcore;
pub mod nn;
pub mod stft_kan;
pub mod train;
pub mod windows;

pub use error::{Error, Result};
pub use model::{LiteDgcnn, ModelConfig, ModelVariant};
pub use ndcore::{Rng, Scalar, Tensor};
