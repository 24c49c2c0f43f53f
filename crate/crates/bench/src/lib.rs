//! Fixtures shared by the criterion benchmarks under `benches/`.

use noisy_rnn::train::init_params;
use noisy_rnn::{Arch, Model, NoiseRng};

/// Initialised model for a preset architecture.
pub fn model(arch: Arch) -> Model<f32> {
    init_params(arch.kind(), arch.dims(), 7)
}

/// `batch` flattened input sequences with entries in `[0, 1)`.
pub fn inputs(arch: Arch, batch: usize) -> Vec<Vec<f32>> {
    let dims = arch.dims();
    let mut rng = NoiseRng::new(11, 0);
    (0..batch)
        .map(|_| {
            (0..dims.steps * dims.input)
                .map(|_| rng.uniform::<f32>())
                .collect()
        })
        .collect()
}

/// A 28×28 ring, roughly the size of a handwritten zero.
pub fn ring_image() -> Vec<f32> {
    let mut img = vec![0.0f32; 28 * 28];
    for r in 0..28 {
        for c in 0..28 {
            let (dy, dx) = (r as f32 - 13.5, c as f32 - 13.5);
            let d = (dy * dy + dx * dx).sqrt();
            if (6.0..9.0).contains(&d) {
                img[r * 28 + c] = 1.0;
            }
        }
    }
    img
}
