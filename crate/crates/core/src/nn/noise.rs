use crate::error::{ensure, Result};
use crate::rng::NoiseRng;
use crate::tensor::{Scalar, Vector};

/// Standard deviation of the Gaussian added after every matrix-vector
/// product, and whether injection is switched on at all.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub enabled: bool,
}

impl NoiseSpec {
    pub fn new(sigma: f64) -> Result<Self> {
        ensure!(
            sigma >= 0.0 && sigma.is_finite(),
            "noise sigma must be finite and >= 0, got {sigma}"
        );
        Ok(Self {
            sigma,
            enabled: true,
        })
    }

    pub fn off() -> Self {
        Self {
            sigma: 0.0,
            enabled: false,
        }
    }

    /// True when a forward pass would actually draw noise.
    pub fn is_active(&self) -> bool {
        self.enabled && self.sigma > 0.0
    }
}

/// Which matrix-vector product a noise vector was added to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InjectionSite {
    /// LSTM gate pre-activation; `gate` indexes forget, input, candidate, output.
    Gate { step: usize, gate: usize },
    /// Vanilla RNN cell pre-activation.
    Cell { step: usize },
    /// Fully connected classifier on the final output state.
    Output,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Injection<T> {
    pub site: InjectionSite,
    pub values: Vector<T>,
}

/// Supplies the `z` term of each noisy affine map during one forward pass.
pub enum NoiseSource<'a, T> {
    Off,
    Fresh {
        sigma: T,
        rng: &'a mut NoiseRng,
    },
    /// Replays previously drawn vectors in order; used to differentiate a
    /// noisy pass with the noise held fixed.
    Replay {
        draws: &'a [Vector<T>],
        next: usize,
    },
}

impl<'a, T: Scalar> NoiseSource<'a, T> {
    pub fn fresh(spec: &NoiseSpec, rng: &'a mut NoiseRng) -> Self {
        if spec.is_active() {
            NoiseSource::Fresh {
                sigma: T::from_f64(spec.sigma),
                rng,
            }
        } else {
            NoiseSource::Off
        }
    }

    pub fn replay(draws: &'a [Vector<T>]) -> Self {
        NoiseSource::Replay { draws, next: 0 }
    }

    /// Next noise vector of length `len`, or `None` when nothing is added.
    pub fn draw(&mut self, len: usize) -> Result<Option<Vector<T>>> {
        match self {
            NoiseSource::Off => Ok(None),
            NoiseSource::Fresh { sigma, rng } => {
                let mut v = Vector::zeros(len);
                rng.add_gaussian(v.as_mut_slice(), *sigma);
                Ok(Some(v))
            }
            NoiseSource::Replay { draws, next } => {
                ensure!(
                    *next < draws.len(),
                    "noise replay exhausted after {next} draws"
                );
                let v = draws[*next].clone();
                ensure!(
                    v.len() == len,
                    "replayed noise draw {next} has length {}, expected {len}",
                    v.len()
                );
                *next += 1;
                Ok(Some(v))
            }
        }
    }
}
