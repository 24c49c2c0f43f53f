#![allow(dead_code)]

use noisy_rnn::nn::{CellKind, Dims, Model};
use noisy_rnn::{NoiseRng, Vector};

/// Parameters uniform in `[-scale, scale]`, independent of the trainer's init.
pub fn random_model(kind: CellKind, dims: Dims, seed: u64, scale: f64) -> Model<f64> {
    let mut m = Model::<f64>::zeros(kind, dims);
    let mut rng = NoiseRng::new(seed, 0xfeed);
    for t in m.tensors_mut() {
        for v in t.iter_mut() {
            *v = (rng.uniform::<f64>() * 2.0 - 1.0) * scale;
        }
    }
    m
}

/// Sequence values representable exactly in f32 so batch and per-sample
/// paths see identical inputs.
pub fn random_sequence(dims: Dims, seed: u64) -> (Vec<f32>, Vec<Vector<f64>>) {
    let mut rng = NoiseRng::new(seed, 0xbeef);
    let flat: Vec<f32> = (0..dims.steps * dims.input)
        .map(|_| rng.uniform::<f32>() * 2.0 - 1.0)
        .collect();
    let seq = flat
        .chunks(dims.input)
        .map(|c| Vector::from(c.iter().map(|&v| v as f64).collect::<Vec<_>>()))
        .collect();
    (flat, seq)
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}
