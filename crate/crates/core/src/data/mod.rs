//! MNIST ingestion and the two sequence views: image rows and pen strokes.

pub mod idx;
pub mod sequence;
pub mod strk;
pub mod stroke;

pub use idx::{load_idx, mnist_paths, LabeledImages};
pub use sequence::{to_row_sequences, SequenceDataset};
pub use strk::{read_strokes, write_strokes};
pub use stroke::{
    image_to_stroke, stroke_length_histogram, to_stroke_dataset, StrokeDataset, StrokeSequence,
};
