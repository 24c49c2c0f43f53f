use crate::data::idx::LabeledImages;
use crate::error::{ensure, Result};
use crate::nn::Dims;
use crate::tensor::{Scalar, Vector};

/// Labeled fixed-length sequences stored flat as `len × steps × input`.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceDataset {
    pub steps: usize,
    pub input: usize,
    pub inputs: Vec<f32>,
    pub labels: Vec<u8>,
}

impl SequenceDataset {
    pub fn new(steps: usize, input: usize, inputs: Vec<f32>, labels: Vec<u8>) -> Result<Self> {
        ensure!(
            inputs.len() == labels.len() * steps * input,
            "dataset holds {} values, expected {} × {steps} × {input}",
            inputs.len(),
            labels.len()
        );
        Ok(Self {
            steps,
            input,
            inputs,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Sample `i` flattened as `steps × input`.
    pub fn sample(&self, i: usize) -> &[f32] {
        let n = self.steps * self.input;
        &self.inputs[i * n..(i + 1) * n]
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    /// Sample `i` as one vector per step.
    pub fn sequence<T: Scalar>(&self, i: usize) -> Vec<Vector<T>> {
        self.sample(i)
            .chunks_exact(self.input)
            .map(|c| Vector::from(c.iter().map(|&v| T::from_f64(v as f64)).collect::<Vec<_>>()))
            .collect()
    }

    pub fn truncated(mut self, n: usize) -> Self {
        let n = n.min(self.len());
        self.labels.truncate(n);
        self.inputs.truncate(n * self.steps * self.input);
        self
    }

    pub fn check_dims(&self, dims: &Dims) -> Result<()> {
        ensure!(
            self.steps == dims.steps && self.input == dims.input,
            "dataset is {} steps × {} inputs, model expects {} × {}",
            self.steps,
            self.input,
            dims.steps,
            dims.input
        );
        ensure!(
            self.labels.iter().all(|&l| (l as usize) < dims.classes),
            "dataset has labels outside the model's {} classes",
            dims.classes
        );
        Ok(())
    }
}

/// Feeds image rows top to bottom: step `t` is row `t`.
pub fn to_row_sequences(data: &LabeledImages) -> Result<SequenceDataset> {
    ensure!(
        data.rows == 28 && data.cols == 28,
        "row sequences need 28×28 images, got {}×{}",
        data.rows,
        data.cols
    );
    SequenceDataset::new(28, 28, data.pixels.clone(), data.labels.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn images(pixels: Vec<f32>, rows: usize, cols: usize) -> LabeledImages {
        LabeledImages {
            rows,
            cols,
            labels: vec![3; pixels.len() / (rows * cols)],
            pixels,
        }
    }

    #[test]
    fn constant_image_gives_identical_rows() {
        let ds = to_row_sequences(&images(vec![0.25; 784], 28, 28)).unwrap();
        let seq = ds.sequence::<f32>(0);
        assert_eq!(seq.len(), 28);
        assert!(seq
            .iter()
            .all(|r| r.len() == 28 && r.iter().all(|&v| v == 0.25)));
        assert_eq!(ds.label(0), 3);
    }

    #[test]
    fn single_pixel_lands_in_its_row() {
        let mut px = vec![0.0; 784];
        px[17 * 28 + 5] = 1.0;
        let seq = to_row_sequences(&images(px.clone(), 28, 28))
            .unwrap()
            .sequence::<f32>(0);
        for (t, row) in seq.iter().enumerate() {
            assert_eq!(row.iter().any(|&v| v != 0.0), t == 17);
        }
        let stacked: Vec<f32> = seq.iter().flat_map(|r| r.iter().copied()).collect();
        assert_eq!(stacked, px);
    }

    #[test]
    fn wrong_shape_rejected() {
        assert!(to_row_sequences(&images(vec![0.0; 64], 8, 8)).is_err());
    }
}
