use std::fmt::Write as _;

use crate::data::SequenceDataset;
use crate::error::{ensure, Error, Result};
use crate::eval::trial_accuracy;
use crate::nn::batch::{backward_batch, forward_batch};
use crate::nn::Model;
use crate::rng::{stream_key, NoiseRng};
use crate::train::adam::{clip_global_norm, Adam};
use crate::train::checkpoint::Checkpoint;
use crate::train::config::TrainConfig;
use crate::train::init::init_params;

const SHUFFLE_STREAM: u64 = 2;
const NOISE_STREAM: u64 = 3;

pub const LOG_CSV_HEADER: &str = "epoch,step,loss,val_acc";

/// One line of the training log.
#[derive(Clone, Debug, PartialEq)]
pub struct LogRow {
    pub epoch: usize,
    /// Optimizer steps taken so far.
    pub step: usize,
    /// Mean minibatch loss over the epoch (with training noise).
    pub loss: f64,
    /// Noiseless validation accuracy after the epoch.
    pub val_acc: f64,
}

impl LogRow {
    pub fn csv_line(&self) -> String {
        let mut s = String::new();
        write!(
            s,
            "{},{},{},{}",
            self.epoch, self.step, self.loss, self.val_acc
        )
        .unwrap();
        s
    }
}

/// Generator for sample `slot` of optimizer step `step`.
pub fn sample_noise_rng(seed: u64, step: usize, slot: usize) -> NoiseRng {
    NoiseRng::new(seed, stream_key(&[NOISE_STREAM, step as u64, slot as u64]))
}

fn shuffled(n: usize, seed: u64, epoch: usize) -> Vec<usize> {
    let mut rng = NoiseRng::new(seed, stream_key(&[SHUFFLE_STREAM, epoch as u64]));
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.below(i + 1);
        order.swap(i, j);
    }
    order
}

/// Statistics of one optimizer step, exposed for monitoring and tests.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepReport {
    pub step: usize,
    pub loss: f64,
    pub grad_norm: f64,
    pub clipped_norm: f64,
}

/// Trains with fresh noise of `sigma_train` on every matrix-vector product
/// of every forward pass.
///
/// `on_epoch` sees each log row as it is produced; `on_step` sees every
/// optimizer step.
pub fn train(
    config: &TrainConfig,
    train_set: &SequenceDataset,
    val_set: &SequenceDataset,
    mut on_epoch: impl FnMut(&LogRow),
    mut on_step: impl FnMut(&StepReport),
) -> Result<(Checkpoint, Vec<LogRow>)> {
    config.validate()?;
    let arch = config.arch;
    train_set.check_dims(&arch.dims())?;
    val_set.check_dims(&arch.dims())?;
    ensure!(!train_set.is_empty(), "empty training set");

    let mut model: Model<f32> = init_params(arch.kind(), arch.dims(), config.seed);
    let mut adam = Adam::new(
        model.stored_param_count(),
        config.learning_rate,
        config.beta1,
        config.beta2,
        config.epsilon,
    );
    let sigma = config.sigma_train as f32;
    let mut step = 0usize;
    let mut log = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        let order = shuffled(train_set.len(), config.seed, epoch);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for idx in order.chunks(config.batch_size) {
            let inputs: Vec<&[f32]> = idx.iter().map(|&i| train_set.sample(i)).collect();
            let labels: Vec<u8> = idx.iter().map(|&i| train_set.label(i)).collect();
            let trace = if sigma > 0.0 {
                let mut rngs: Vec<NoiseRng> = (0..idx.len())
                    .map(|b| sample_noise_rng(config.seed, step, b))
                    .collect();
                forward_batch(&model, &inputs, sigma, Some(&mut rngs))?
            } else {
                forward_batch(&model, &inputs, sigma, None)?
            };
            let (loss, mut grads) = backward_batch(&model, &trace, &labels)?;
            step += 1;
            if !loss.is_finite() {
                return Err(Error::Diverged { step, loss });
            }
            let grad_norm = clip_global_norm(&mut grads, config.clip_norm);
            if !grad_norm.is_finite() {
                return Err(Error::Diverged {
                    step,
                    loss: grad_norm,
                });
            }
            adam.step(&mut model, &grads);
            on_step(&StepReport {
                step,
                loss,
                grad_norm,
                clipped_norm: grads.global_norm(),
            });
            loss_sum += loss;
            batches += 1;
        }
        let val_acc = if val_set.is_empty() {
            f64::NAN
        } else {
            trial_accuracy(&model, val_set, 0.0, config.seed, 0)?
        };
        let row = LogRow {
            epoch,
            step,
            loss: loss_sum / batches as f64,
            val_acc,
        };
        on_epoch(&row);
        log.push(row);
    }
    let ckpt = Checkpoint::new(model, config.sigma_train, config.seed, config.epochs as u32);
    Ok((ckpt, log))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shuffle_is_a_deterministic_permutation() {
        let a = shuffled(100, 5, 1);
        assert_eq!(a, shuffled(100, 5, 1));
        assert_ne!(a, shuffled(100, 5, 2));
        let mut s = a.clone();
        s.sort();
        assert_eq!(s, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn log_line_format() {
        let r = LogRow {
            epoch: 2,
            step: 938,
            loss: 0.125,
            val_acc: 0.98,
        };
        assert_eq!(r.csv_line(), "2,938,0.125,0.98");
    }
}
