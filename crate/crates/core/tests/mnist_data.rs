//! Properties over the real MNIST files. They run when the IDX files are
//! found in `MNIST_DIR` or `<workspace>/data/mnist` and are skipped with a
//! note otherwise.

use std::path::PathBuf;

use noisy_rnn::data::{load_idx, mnist_paths, to_row_sequences, to_stroke_dataset, LabeledImages};
use noisy_rnn::eval::evaluate;
use noisy_rnn::train::init_params;
use noisy_rnn::{Arch, Model};

fn mnist(train: bool) -> Option<LabeledImages> {
    let dir = std::env::var("MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|_| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"));
    let (images, labels) = mnist_paths(&dir, train);
    if !images.exists() {
        eprintln!("skipping: no MNIST files under {}", dir.display());
        return None;
    }
    Some(load_idx(images, labels).unwrap())
}

#[test]
fn training_split_has_sixty_thousand_labelled_images() {
    let Some(train) = mnist(true) else { return };
    assert_eq!(train.len(), 60000);
    assert_eq!(train.labels.len(), 60000);
    assert_eq!((train.rows, train.cols), (28, 28));
    let Some(test) = mnist(false) else { return };
    assert_eq!(test.len(), 10000);
}

#[test]
fn every_digit_yields_a_bounded_stroke() {
    let Some(test) = mnist(false) else { return };
    let strokes = to_stroke_dataset(&test).unwrap();
    assert_eq!(strokes.sequences.len(), 10000);
    assert!(strokes.valid_lengths.iter().all(|&l| l >= 5));
    for i in 0..strokes.sequences.len() {
        let valid = strokes.valid_lengths[i] as usize * 2;
        let s = strokes.sequences.sample(i);
        assert!(
            s[..valid].iter().all(|v| (0.0..=1.0).contains(v)),
            "sample {i}"
        );
        assert!(s[valid..].iter().all(|&v| v == 0.0), "sample {i} padding");
    }
}

#[test]
fn untrained_model_is_at_chance() {
    let Some(test) = mnist(false) else { return };
    let data = to_row_sequences(&test).unwrap();
    let model: Model<f32> = init_params(Arch::LstmRows.kind(), Arch::LstmRows.dims(), 12345);
    let acc = evaluate(&model, &data, 0.0, 1, 0).unwrap().mean;
    assert!((0.05..=0.15).contains(&acc), "untrained accuracy {acc}");
}
