//! Recurrent classifiers whose every matrix-vector product can carry
//! additive Gaussian noise, trained with that noise switched on so the
//! learned weights tolerate noisy (e.g. analog) inference.
//!
//! * [`tensor`] and [`rng`]: dense kernels and reproducible noise streams.
//! * [`nn`]: noisy affine layers, LSTM / vanilla RNN cells, BPTT.
//! * [`data`]: MNIST IDX loading, row sequences, pen-stroke conversion.
//! * [`train`]: the training loop, Adam, checkpoints.
//! * [`eval`]: noisy accuracy, robustness grids, weight/state statistics.

pub mod data;
pub mod error;
pub mod eval;
pub mod nn;
pub mod rng;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use nn::{Arch, CellKind, Dims, Model, NoiseSpec};
pub use rng::NoiseRng;
pub use tensor::{Matrix, Scalar, Vector};
