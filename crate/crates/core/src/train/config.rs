use crate::error::{ensure, Result};
use crate::nn::Arch;

/// Hyperparameters of one noise-injection training run.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub arch: Arch,
    /// Standard deviation of the noise injected during training.
    pub sigma_train: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Global gradient-norm ceiling.
    pub clip_norm: f64,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(arch: Arch, sigma_train: f64, seed: u64) -> Self {
        Self {
            arch,
            sigma_train,
            epochs: 20,
            batch_size: 128,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            clip_norm: 5.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.sigma_train >= 0.0 && self.sigma_train.is_finite(),
            "sigma_train must be >= 0"
        );
        ensure!(self.epochs >= 1, "epochs must be >= 1");
        ensure!(self.batch_size >= 1, "batch size must be >= 1");
        ensure!(
            self.learning_rate > 0.0 && self.learning_rate.is_finite(),
            "learning rate must be > 0"
        );
        ensure!(
            (0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2),
            "Adam betas must lie in [0, 1)"
        );
        ensure!(
            self.epsilon > 0.0 && self.epsilon.is_finite(),
            "Adam epsilon must be > 0"
        );
        ensure!(
            self.clip_norm > 0.0 && self.clip_norm.is_finite(),
            "clip norm must be > 0"
        );
        Ok(())
    }
}
