use crate::nn::lstm::LstmStep;
use crate::nn::noise::Injection;
use crate::nn::rnn::RnnStep;
use crate::nn::softmax::argmax;
use crate::tensor::{Scalar, Vector};

#[derive(Clone, Debug, PartialEq)]
pub enum CellTrace<T> {
    Lstm(Vec<LstmStep<T>>),
    Rnn(Vec<RnnStep<T>>),
}

/// Everything one forward pass computed, kept for backpropagation and for
/// state histograms.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardTrace<T> {
    pub cells: CellTrace<T>,
    pub output_noise: Option<Injection<T>>,
    pub logits: Vector<T>,
    pub probs: Vector<T>,
}

impl<T: Scalar> ForwardTrace<T> {
    pub fn steps(&self) -> usize {
        match &self.cells {
            CellTrace::Lstm(s) => s.len(),
            CellTrace::Rnn(s) => s.len(),
        }
    }

    /// `h_t` for `t = 1..=T`.
    pub fn output_states(&self) -> Vec<&Vector<T>> {
        match &self.cells {
            CellTrace::Lstm(s) => s.iter().map(|s| &s.h).collect(),
            CellTrace::Rnn(s) => s.iter().map(|s| &s.h).collect(),
        }
    }

    /// `c_t` for `t = 1..=T`; vanilla RNNs have none.
    pub fn internal_states(&self) -> Option<Vec<&Vector<T>>> {
        match &self.cells {
            CellTrace::Lstm(s) => Some(s.iter().map(|s| &s.c).collect()),
            CellTrace::Rnn(_) => None,
        }
    }

    pub fn final_output_state(&self) -> &Vector<T> {
        self.output_states()
            .last()
            .copied()
            .expect("a trace has at least one step")
    }

    /// Every noise vector in draw order (cells step by step, then output).
    pub fn injections(&self) -> Vec<&Injection<T>> {
        let cell: Vec<&Injection<T>> = match &self.cells {
            CellTrace::Lstm(s) => s.iter().flat_map(|s| s.noise.iter()).collect(),
            CellTrace::Rnn(s) => s.iter().flat_map(|s| s.noise.iter()).collect(),
        };
        cell.into_iter().chain(self.output_noise.iter()).collect()
    }

    /// Noise values in draw order, suitable for `NoiseSource::replay`.
    pub fn noise_values(&self) -> Vec<Vector<T>> {
        self.injections()
            .into_iter()
            .map(|i| i.values.clone())
            .collect()
    }

    pub fn prediction(&self) -> usize {
        argmax(self.logits.as_slice())
    }
}
