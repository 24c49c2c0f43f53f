//! Noisy affine layers, LSTM and vanilla RNN cells, the unrolled forward
//! pass and backpropagation through time.

pub mod batch;
pub mod linear;
pub mod lstm;
pub mod model;
pub mod noise;
pub mod rnn;
pub mod softmax;
pub mod trace;

pub use linear::{noisy_affine, NoisyLinear};
pub use lstm::{lstm_step, LstmModel, LstmStep};
pub use model::{Arch, CellKind, Dims, Gradients, Model};
pub use noise::{Injection, InjectionSite, NoiseSource, NoiseSpec};
pub use rnn::{rnn_step, RnnModel, RnnStep};
pub use softmax::{argmax, cross_entropy, softmax};
pub use trace::{CellTrace, ForwardTrace};
