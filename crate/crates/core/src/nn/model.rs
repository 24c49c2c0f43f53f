use std::fmt;
use std::str::FromStr;

use crate::error::{contract, ensure, Error, Result};
use crate::nn::lstm::LstmModel;
use crate::nn::noise::{Injection, NoiseSource, NoiseSpec};
use crate::nn::rnn::RnnModel;
use crate::nn::softmax::{argmax, cross_entropy, softmax};
use crate::nn::trace::{CellTrace, ForwardTrace};
use crate::rng::NoiseRng;
use crate::tensor::{Scalar, Vector};

/// Shape metadata shared by every recurrent classifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Dims {
    pub steps: usize,
    pub input: usize,
    pub hidden: usize,
    pub classes: usize,
}

impl Dims {
    pub fn new(steps: usize, input: usize, hidden: usize, classes: usize) -> Result<Self> {
        ensure!(
            steps >= 1 && input >= 1 && hidden >= 1 && classes >= 2,
            "invalid dims: steps {steps}, input {input}, hidden {hidden}, classes {classes}"
        );
        Ok(Self {
            steps,
            input,
            hidden,
            classes,
        })
    }

    /// Width of the concatenated `[x_t ; h_{t-1}]` cell input.
    pub fn concat(&self) -> usize {
        self.input + self.hidden
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CellKind {
    Lstm,
    Rnn,
}

impl CellKind {
    /// Closed-form trainable scalar count.
    pub fn param_count(self, d: &Dims) -> usize {
        let cell = d.hidden * d.concat() + d.hidden;
        let out = d.classes * d.hidden + d.classes;
        match self {
            CellKind::Lstm => 4 * cell + out,
            CellKind::Rnn => cell + out,
        }
    }

    /// Noise vectors drawn by one forward pass when noise is active.
    pub fn injections_per_pass(self, steps: usize) -> usize {
        match self {
            CellKind::Lstm => 4 * steps + 1,
            CellKind::Rnn => steps + 1,
        }
    }
}

/// The three MNIST configurations: 28 image rows through an LSTM, 50 pen
/// points through an LSTM, and 28 image rows through a vanilla RNN.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Arch {
    LstmRows,
    LstmStrokes,
    RnnRows,
}

impl Arch {
    pub const ALL: [Arch; 3] = [Arch::LstmRows, Arch::LstmStrokes, Arch::RnnRows];

    pub fn kind(self) -> CellKind {
        match self {
            Arch::LstmRows | Arch::LstmStrokes => CellKind::Lstm,
            Arch::RnnRows => CellKind::Rnn,
        }
    }

    pub fn dims(self) -> Dims {
        match self {
            Arch::LstmRows | Arch::RnnRows => Dims {
                steps: 28,
                input: 28,
                hidden: 128,
                classes: 10,
            },
            Arch::LstmStrokes => Dims {
                steps: 50,
                input: 2,
                hidden: 128,
                classes: 10,
            },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Arch::LstmRows => "lstm-rows",
            Arch::LstmStrokes => "lstm-strokes",
            Arch::RnnRows => "rnn-rows",
        }
    }

    pub fn tag(self) -> u8 {
        match self {
            Arch::LstmRows => 1,
            Arch::LstmStrokes => 2,
            Arch::RnnRows => 3,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Arch> {
        Arch::ALL.into_iter().find(|a| a.tag() == tag)
    }

    /// Whether the model consumes stroke sequences rather than image rows.
    pub fn uses_strokes(self) -> bool {
        self == Arch::LstmStrokes
    }
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Arch {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Arch::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                contract(format!(
                    "unknown architecture {s:?} (expected lstm-rows, lstm-strokes or rnn-rows)"
                ))
            })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Model<T> {
    Lstm(LstmModel<T>),
    Rnn(RnnModel<T>),
}

/// Gradient of the loss with respect to every parameter, in model layout.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T>(pub Model<T>);

impl<T: Scalar> Model<T> {
    pub fn zeros(kind: CellKind, dims: Dims) -> Self {
        match kind {
            CellKind::Lstm => Model::Lstm(LstmModel::zeros(dims)),
            CellKind::Rnn => Model::Rnn(RnnModel::zeros(dims)),
        }
    }

    pub fn for_arch(arch: Arch) -> Self {
        Self::zeros(arch.kind(), arch.dims())
    }

    pub fn kind(&self) -> CellKind {
        match self {
            Model::Lstm(_) => CellKind::Lstm,
            Model::Rnn(_) => CellKind::Rnn,
        }
    }

    pub fn dims(&self) -> Dims {
        match self {
            Model::Lstm(m) => m.dims,
            Model::Rnn(m) => m.dims,
        }
    }

    /// Exact number of trainable scalars.
    pub fn param_count(&self) -> usize {
        self.kind().param_count(&self.dims())
    }

    /// Parameter tensors in the fixed serialisation order: for an LSTM the
    /// forget, input, candidate and output gates (weight then bias each),
    /// then the classifier weight and bias; for an RNN the cell weight and
    /// bias, then the classifier.
    pub fn tensors(&self) -> Vec<&[T]> {
        let (cells, out) = match self {
            Model::Lstm(m) => (m.gates.iter().collect::<Vec<_>>(), &m.out),
            Model::Rnn(m) => (vec![&m.cell], &m.out),
        };
        cells
            .into_iter()
            .chain(std::iter::once(out))
            .flat_map(|l| [l.w.as_slice(), l.b.as_slice()])
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [T]> {
        let (cells, out) = match self {
            Model::Lstm(m) => (m.gates.iter_mut().collect::<Vec<_>>(), &mut m.out),
            Model::Rnn(m) => (vec![&mut m.cell], &mut m.out),
        };
        cells
            .into_iter()
            .chain(std::iter::once(out))
            .flat_map(|l| [l.w.as_mut_slice(), l.b.as_mut_slice()])
            .collect()
    }

    /// Counts scalars by walking the stored tensors.
    pub fn stored_param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn to_flat(&self) -> Vec<T> {
        self.tensors().concat()
    }

    pub fn load_flat(&mut self, flat: &[T]) -> Result<()> {
        ensure!(
            flat.len() == self.stored_param_count(),
            "flat parameter vector has {} entries, model needs {}",
            flat.len(),
            self.stored_param_count()
        );
        let mut off = 0;
        for t in self.tensors_mut() {
            t.copy_from_slice(&flat[off..off + t.len()]);
            off += t.len();
        }
        Ok(())
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.kind(), self.dims())
    }

    pub fn cast<U: Scalar>(&self) -> Model<U> {
        let mut out = Model::<U>::zeros(self.kind(), self.dims());
        let flat: Vec<U> = self
            .to_flat()
            .into_iter()
            .map(|v| U::from_f64(v.as_f64()))
            .collect();
        out.load_flat(&flat).expect("same layout");
        out
    }

    fn check_sequence(&self, seq: &[Vector<T>]) -> Result<()> {
        let d = self.dims();
        ensure!(
            seq.len() == d.steps,
            "sequence has {} steps, model expects {}",
            seq.len(),
            d.steps
        );
        ensure!(
            seq.iter().all(|x| x.len() == d.input),
            "every sequence element must have length {}",
            d.input
        );
        Ok(())
    }

    /// Full unrolled pass from zero state, noise drawn fresh from `rng`.
    pub fn forward(
        &self,
        seq: &[Vector<T>],
        noise: &NoiseSpec,
        rng: &mut NoiseRng,
    ) -> Result<ForwardTrace<T>> {
        self.forward_with(seq, &mut NoiseSource::fresh(noise, rng))
    }

    pub fn forward_with(
        &self,
        seq: &[Vector<T>],
        noise: &mut NoiseSource<'_, T>,
    ) -> Result<ForwardTrace<T>> {
        self.check_sequence(seq)?;
        let d = self.dims();
        let mut h = Vector::zeros(d.hidden);
        let (cells, out) = match self {
            Model::Lstm(m) => {
                let mut c = Vector::zeros(d.hidden);
                let mut steps = Vec::with_capacity(d.steps);
                for (t, x) in seq.iter().enumerate() {
                    let s = m.step_with(t, x, &h, &c, noise)?;
                    h = s.h.clone();
                    c = s.c.clone();
                    steps.push(s);
                }
                (CellTrace::Lstm(steps), &m.out)
            }
            Model::Rnn(m) => {
                let mut steps = Vec::with_capacity(d.steps);
                for (t, x) in seq.iter().enumerate() {
                    let s = m.step_with(t, x, &h, noise)?;
                    h = s.h.clone();
                    steps.push(s);
                }
                (CellTrace::Rnn(steps), &m.out)
            }
        };
        let (logits, z) = out.forward_with(&h, noise)?;
        let probs = Vector::from(softmax(logits.as_slice()));
        Ok(ForwardTrace {
            cells,
            output_noise: z.map(|values| Injection {
                site: crate::nn::noise::InjectionSite::Output,
                values,
            }),
            logits,
            probs,
        })
    }

    /// Top-1 class of one sequence.
    pub fn predict(
        &self,
        seq: &[Vector<T>],
        noise: &NoiseSpec,
        rng: &mut NoiseRng,
    ) -> Result<usize> {
        Ok(argmax(self.forward(seq, noise, rng)?.logits.as_slice()))
    }

    /// Cross-entropy of the final-step prediction and its gradient by
    /// backpropagation through time. Recorded noise is a constant offset.
    pub fn loss_and_backward(
        &self,
        trace: &ForwardTrace<T>,
        label: usize,
    ) -> Result<(T, Gradients<T>)> {
        let d = self.dims();
        ensure!(
            label < d.classes,
            "label {label} out of range for {} classes",
            d.classes
        );
        let loss = cross_entropy(trace.logits.as_slice(), label);
        let mut dlogits = trace.probs.clone();
        dlogits[label] -= T::one();

        let mut grads = self.zeros_like();
        let h_last = trace.final_output_state();
        let (out, gout) = match (self, &mut grads) {
            (Model::Lstm(m), Model::Lstm(g)) => (&m.out, &mut g.out),
            (Model::Rnn(m), Model::Rnn(g)) => (&m.out, &mut g.out),
            _ => unreachable!("zeros_like preserves the variant"),
        };
        gout.w.add_outer(&dlogits, h_last)?;
        for (gb, &v) in gout.b.as_mut_slice().iter_mut().zip(dlogits.iter()) {
            *gb += v;
        }
        let dh = out.w.matvec_transposed(&dlogits)?;

        match (self, &mut grads, &trace.cells) {
            (Model::Lstm(m), Model::Lstm(g), CellTrace::Lstm(steps)) => m.backward(steps, dh, g)?,
            (Model::Rnn(m), Model::Rnn(g), CellTrace::Rnn(steps)) => m.backward(steps, dh, g)?,
            _ => return Err(contract("trace was produced by a different cell type")),
        }
        Ok((loss, Gradients(grads)))
    }
}

impl<T: Scalar> Gradients<T> {
    pub fn model(&self) -> &Model<T> {
        &self.0
    }

    pub fn global_norm(&self) -> f64 {
        self.0
            .tensors()
            .iter()
            .flat_map(|t| t.iter())
            .map(|v| {
                let v = v.as_f64();
                v * v
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn to_flat(&self) -> Vec<T> {
        self.0.to_flat()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_param_counts() {
        assert_eq!(Model::<f32>::for_arch(Arch::LstmRows).param_count(), 81674);
        assert_eq!(
            Model::<f32>::for_arch(Arch::LstmStrokes).param_count(),
            68362
        );
        assert_eq!(Model::<f32>::for_arch(Arch::RnnRows).param_count(), 21386);
    }

    #[test]
    fn closed_form_matches_storage_over_sweep() {
        for input in 1..=8 {
            for hidden in 1..=8 {
                for classes in 2..=5 {
                    let d = Dims::new(3, input, hidden, classes).unwrap();
                    for kind in [CellKind::Lstm, CellKind::Rnn] {
                        let m = Model::<f64>::zeros(kind, d);
                        assert_eq!(m.param_count(), m.stored_param_count());
                    }
                }
            }
        }
    }

    #[test]
    fn arch_names_round_trip() {
        for a in Arch::ALL {
            assert_eq!(a.name().parse::<Arch>().unwrap(), a);
            assert_eq!(Arch::from_tag(a.tag()), Some(a));
        }
        assert!("gru".parse::<Arch>().is_err());
    }
}
