use rayon::prelude::*;

use crate::data::SequenceDataset;
use crate::error::{ensure, Result};
use crate::nn::batch::infer_batch;
use crate::nn::softmax::{argmax, cross_entropy};
use crate::nn::Model;
use crate::rng::{stream_key, NoiseRng};
use crate::tensor::Scalar;

pub const EVAL_BATCH: usize = 250;
const EVAL_DOMAIN: u64 = 0xE7A1;

/// Stream for trial `trial` of grid cell `(row, col)`; sample `i` of that
/// trial draws from sub-stream `i`.
pub fn cell_stream(row: usize, col: usize, trial: usize) -> u64 {
    stream_key(&[EVAL_DOMAIN, row as u64, col as u64, trial as u64])
}

/// Mean and unbiased standard deviation of per-trial accuracies.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialStats {
    pub mean: f64,
    pub std: f64,
    pub accuracies: Vec<f64>,
}

impl TrialStats {
    pub fn from_accuracies(accuracies: Vec<f64>) -> Self {
        // Offsets from the first trial keep identical trials exactly
        // identical: their mean is that trial and their spread is zero.
        let n = accuracies.len() as f64;
        let origin = accuracies.first().copied().unwrap_or(0.0);
        let shift = accuracies.iter().map(|a| a - origin).sum::<f64>() / n;
        let mean = origin + shift;
        let std = if accuracies.len() > 1 {
            let ss = accuracies
                .iter()
                .map(|a| (a - origin - shift).powi(2))
                .sum::<f64>();
            (ss / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            std,
            accuracies,
        }
    }
}

/// Fraction of `data` classified correctly by one noisy pass, noise drawn
/// per sample from `stream`.
pub fn trial_accuracy<T: Scalar>(
    model: &Model<T>,
    data: &SequenceDataset,
    sigma: f64,
    seed: u64,
    stream: u64,
) -> Result<f64> {
    data.check_dims(&model.dims())?;
    ensure!(!data.is_empty(), "accuracy over an empty dataset");
    ensure!(sigma >= 0.0 && sigma.is_finite(), "sigma must be >= 0");
    let classes = model.dims().classes;
    let sigma_t = T::from_f64(sigma);
    let mut correct = 0usize;
    for start in (0..data.len()).step_by(EVAL_BATCH) {
        let end = (start + EVAL_BATCH).min(data.len());
        let inputs: Vec<&[f32]> = (start..end).map(|i| data.sample(i)).collect();
        let logits = if sigma > 0.0 {
            let mut rngs: Vec<NoiseRng> = (start..end)
                .map(|i| NoiseRng::new(seed, stream_key(&[stream, i as u64])))
                .collect();
            infer_batch(model, &inputs, sigma_t, Some(&mut rngs))?
        } else {
            infer_batch(model, &inputs, sigma_t, None)?
        };
        correct += logits
            .chunks_exact(classes)
            .zip(start..end)
            .filter(|(row, i)| argmax(row) == data.label(*i) as usize)
            .count();
    }
    Ok(correct as f64 / data.len() as f64)
}

pub(crate) fn evaluate_cell<T: Scalar>(
    model: &Model<T>,
    data: &SequenceDataset,
    sigma_val: f64,
    trials: usize,
    seed: u64,
    row: usize,
    col: usize,
) -> Result<TrialStats> {
    ensure!(trials >= 1, "trials must be >= 1");
    if sigma_val == 0.0 {
        // noiseless trials are identical
        let acc = trial_accuracy(model, data, 0.0, seed, 0)?;
        return Ok(TrialStats::from_accuracies(vec![acc; trials]));
    }
    let accs = (0..trials)
        .into_par_iter()
        .map(|t| trial_accuracy(model, data, sigma_val, seed, cell_stream(row, col, t)))
        .collect::<Result<Vec<_>>>()?;
    Ok(TrialStats::from_accuracies(accs))
}

/// Accuracy under inference noise `sigma_val`, averaged over independent
/// trials. Ties in the logits resolve to the lowest class.
pub fn evaluate<T: Scalar>(
    model: &Model<T>,
    data: &SequenceDataset,
    sigma_val: f64,
    trials: usize,
    seed: u64,
) -> Result<TrialStats> {
    evaluate_cell(model, data, sigma_val, trials, seed, 0, 0)
}

/// Noiseless mean cross-entropy.
pub fn mean_loss<T: Scalar>(model: &Model<T>, data: &SequenceDataset) -> Result<f64> {
    data.check_dims(&model.dims())?;
    ensure!(!data.is_empty(), "loss over an empty dataset");
    let classes = model.dims().classes;
    let mut total = 0.0;
    for start in (0..data.len()).step_by(EVAL_BATCH) {
        let end = (start + EVAL_BATCH).min(data.len());
        let inputs: Vec<&[f32]> = (start..end).map(|i| data.sample(i)).collect();
        let logits = infer_batch(model, &inputs, T::zero(), None)?;
        total += logits
            .chunks_exact(classes)
            .zip(start..end)
            .map(|(row, i)| cross_entropy(row, data.label(i) as usize).as_f64())
            .sum::<f64>();
    }
    Ok(total / data.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_trials_have_exactly_zero_spread() {
        let s = TrialStats::from_accuracies(vec![0.9871; 40]);
        assert_eq!(s.mean, 0.9871);
        assert_eq!(s.std, 0.0);
    }

    #[test]
    fn unbiased_spread() {
        let s = TrialStats::from_accuracies(vec![0.9, 0.8, 1.0]);
        assert!((s.mean - 0.9).abs() < 1e-15);
        assert!((s.std - 0.1).abs() < 1e-15);
        assert_eq!(TrialStats::from_accuracies(vec![0.5]).std, 0.0);
    }
}
