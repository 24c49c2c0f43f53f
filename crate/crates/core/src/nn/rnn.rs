use crate::error::{ensure, Result};
use crate::nn::linear::NoisyLinear;
use crate::nn::model::Dims;
use crate::nn::noise::{Injection, InjectionSite, NoiseSource, NoiseSpec};
use crate::rng::NoiseRng;
use crate::tensor::{Scalar, Vector};

/// Gateless recurrent classifier, `h_t = tanh(W·[x_t ; h_{t-1}] + b + z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RnnModel<T> {
    pub dims: Dims,
    pub cell: NoisyLinear<T>,
    pub out: NoisyLinear<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RnnStep<T> {
    pub z: Vector<T>,
    pub preact: Vector<T>,
    pub h: Vector<T>,
    pub noise: Vec<Injection<T>>,
}

impl<T: Scalar> RnnModel<T> {
    pub fn zeros(dims: Dims) -> Self {
        Self {
            dims,
            cell: NoisyLinear::zeros(dims.hidden, dims.concat()),
            out: NoisyLinear::zeros(dims.classes, dims.hidden),
        }
    }

    pub(crate) fn step_with(
        &self,
        t: usize,
        x: &Vector<T>,
        h_prev: &Vector<T>,
        noise: &mut NoiseSource<'_, T>,
    ) -> Result<RnnStep<T>> {
        let d = self.dims;
        ensure!(
            x.len() == d.input && h_prev.len() == d.hidden,
            "rnn step expects x[{}], h[{}]; got x[{}], h[{}]",
            d.input,
            d.hidden,
            x.len(),
            h_prev.len()
        );
        let z = x.concat(h_prev);
        let (preact, n) = self.cell.forward_with(&z, noise)?;
        let h = Vector::from(preact.iter().map(|v| v.tanh()).collect::<Vec<_>>());
        Ok(RnnStep {
            z,
            preact,
            h,
            noise: n
                .map(|values| Injection {
                    site: InjectionSite::Cell { step: t },
                    values,
                })
                .into_iter()
                .collect(),
        })
    }

    pub(crate) fn backward(
        &self,
        steps: &[RnnStep<T>],
        mut dh: Vector<T>,
        grads: &mut RnnModel<T>,
    ) -> Result<()> {
        let d = self.dims;
        for s in steps.iter().rev() {
            let da = Vector::from(
                (0..d.hidden)
                    .map(|k| dh[k] * (T::one() - s.h[k] * s.h[k]))
                    .collect::<Vec<_>>(),
            );
            grads.cell.w.add_outer(&da, &s.z)?;
            for (gb, &v) in grads.cell.b.as_mut_slice().iter_mut().zip(da.iter()) {
                *gb += v;
            }
            let dz = self.cell.w.matvec_transposed(&da)?;
            dh = Vector::from(dz.as_slice()[d.input..].to_vec());
        }
        Ok(())
    }
}

/// One vanilla RNN step with a single noise draw.
pub fn rnn_step<T: Scalar>(
    model: &RnnModel<T>,
    x_t: &Vector<T>,
    h_prev: &Vector<T>,
    noise: &NoiseSpec,
    rng: &mut NoiseRng,
) -> Result<Vector<T>> {
    Ok(model
        .step_with(0, x_t, h_prev, &mut NoiseSource::fresh(noise, rng))?
        .h)
}
