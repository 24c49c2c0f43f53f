use crate::error::{ensure, Result};
use crate::nn::linear::NoisyLinear;
use crate::nn::model::Dims;
use crate::nn::noise::{Injection, InjectionSite, NoiseSource, NoiseSpec};
use crate::rng::NoiseRng;
use crate::tensor::{sigmoid, Scalar, Vector};

pub const FORGET: usize = 0;
pub const INPUT: usize = 1;
pub const CANDIDATE: usize = 2;
pub const OUTPUT: usize = 3;

/// LSTM classifier. Each gate is one affine map over `[x_t ; h_{t-1}]`, so a
/// step performs exactly four noisy matrix-vector products.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmModel<T> {
    pub dims: Dims,
    /// Forget, input, candidate and output gates, each `hidden × (input + hidden)`.
    pub gates: [NoisyLinear<T>; 4],
    pub out: NoisyLinear<T>,
}

/// Values of one LSTM step needed for the backward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmStep<T> {
    /// `[x_t ; h_{t-1}]`
    pub z: Vector<T>,
    /// Gate pre-activations including noise, indexed like `gates`.
    pub preact: [Vector<T>; 4],
    /// `f, i, g, o` after their nonlinearities.
    pub act: [Vector<T>; 4],
    pub c_prev: Vector<T>,
    pub c: Vector<T>,
    pub tanh_c: Vector<T>,
    pub h: Vector<T>,
    pub noise: Vec<Injection<T>>,
}

impl<T: Scalar> LstmModel<T> {
    pub fn zeros(dims: Dims) -> Self {
        let gate = || NoisyLinear::zeros(dims.hidden, dims.concat());
        Self {
            dims,
            gates: [gate(), gate(), gate(), gate()],
            out: NoisyLinear::zeros(dims.classes, dims.hidden),
        }
    }

    pub(crate) fn step_with(
        &self,
        t: usize,
        x: &Vector<T>,
        h_prev: &Vector<T>,
        c_prev: &Vector<T>,
        noise: &mut NoiseSource<'_, T>,
    ) -> Result<LstmStep<T>> {
        let d = self.dims;
        ensure!(
            x.len() == d.input && h_prev.len() == d.hidden && c_prev.len() == d.hidden,
            "lstm step expects x[{}], h[{}], c[{}]; got x[{}], h[{}], c[{}]",
            d.input,
            d.hidden,
            d.hidden,
            x.len(),
            h_prev.len(),
            c_prev.len()
        );
        let z = x.concat(h_prev);
        let mut injections = Vec::new();
        let mut preact: [Vector<T>; 4] = Default::default();
        for (g, layer) in self.gates.iter().enumerate() {
            let (a, n) = layer.forward_with(&z, noise)?;
            if let Some(values) = n {
                injections.push(Injection {
                    site: InjectionSite::Gate { step: t, gate: g },
                    values,
                });
            }
            preact[g] = a;
        }
        let act: [Vector<T>; 4] = std::array::from_fn(|g| {
            let f = if g == CANDIDATE {
                T::tanh
            } else {
                sigmoid::<T>
            };
            Vector::from(preact[g].iter().map(|&v| f(v)).collect::<Vec<_>>())
        });
        let (f, i, gc, o) = (&act[FORGET], &act[INPUT], &act[CANDIDATE], &act[OUTPUT]);
        let c: Vec<T> = (0..d.hidden)
            .map(|k| f[k] * c_prev[k] + i[k] * gc[k])
            .collect();
        let tanh_c: Vec<T> = c.iter().map(|v| v.tanh()).collect();
        let h: Vec<T> = (0..d.hidden).map(|k| o[k] * tanh_c[k]).collect();
        Ok(LstmStep {
            z,
            preact,
            act,
            c_prev: c_prev.clone(),
            c: c.into(),
            tanh_c: tanh_c.into(),
            h: h.into(),
            noise: injections,
        })
    }

    /// Accumulates cell-parameter gradients into `grads`, starting from the
    /// gradient `dh` at the final output state.
    pub(crate) fn backward(
        &self,
        steps: &[LstmStep<T>],
        mut dh: Vector<T>,
        grads: &mut LstmModel<T>,
    ) -> Result<()> {
        let d = self.dims;
        let one = T::one();
        let mut dc = Vector::<T>::zeros(d.hidden);
        for s in steps.iter().rev() {
            let (f, i, g, o) = (
                &s.act[FORGET],
                &s.act[INPUT],
                &s.act[CANDIDATE],
                &s.act[OUTPUT],
            );
            let mut da: [Vector<T>; 4] = std::array::from_fn(|_| Vector::zeros(d.hidden));
            let mut dc_prev = Vector::zeros(d.hidden);
            for k in 0..d.hidden {
                let tc = s.tanh_c[k];
                let d_o = dh[k] * tc;
                let dck = dc[k] + dh[k] * o[k] * (one - tc * tc);
                da[FORGET][k] = dck * s.c_prev[k] * f[k] * (one - f[k]);
                da[INPUT][k] = dck * g[k] * i[k] * (one - i[k]);
                da[CANDIDATE][k] = dck * i[k] * (one - g[k] * g[k]);
                da[OUTPUT][k] = d_o * o[k] * (one - o[k]);
                dc_prev[k] = dck * f[k];
            }
            let mut dz = Vector::zeros(d.concat());
            for (gate, (layer, glayer)) in self.gates.iter().zip(grads.gates.iter_mut()).enumerate()
            {
                glayer.w.add_outer(&da[gate], &s.z)?;
                for (gb, &v) in glayer.b.as_mut_slice().iter_mut().zip(da[gate].iter()) {
                    *gb += v;
                }
                let part = layer.w.matvec_transposed(&da[gate])?;
                for (a, &b) in dz.as_mut_slice().iter_mut().zip(part.iter()) {
                    *a += b;
                }
            }
            dh = Vector::from(dz.as_slice()[d.input..].to_vec());
            dc = dc_prev;
        }
        Ok(())
    }
}

/// One LSTM step with four independent noise draws, one per gate.
pub fn lstm_step<T: Scalar>(
    model: &LstmModel<T>,
    x_t: &Vector<T>,
    h_prev: &Vector<T>,
    c_prev: &Vector<T>,
    noise: &NoiseSpec,
    rng: &mut NoiseRng,
) -> Result<LstmStep<T>> {
    model.step_with(0, x_t, h_prev, c_prev, &mut NoiseSource::fresh(noise, rng))
}
