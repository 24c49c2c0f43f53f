use crate::nn::{Gradients, Model};
use crate::tensor::Scalar;

/// Adam with bias correction over the model's flat parameter order.
#[derive(Clone, Debug)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(param_count: usize, lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            lr,
            beta1,
            beta2,
            eps,
            t: 0,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
        }
    }

    pub fn steps(&self) -> i32 {
        self.t
    }

    pub fn step<T: Scalar>(&mut self, model: &mut Model<T>, grads: &Gradients<T>) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let step = self.lr * c2.sqrt() / c1;
        let mut idx = 0;
        for (p, g) in model.tensors_mut().into_iter().zip(grads.model().tensors()) {
            for (pv, &gv) in p.iter_mut().zip(g) {
                let gv = gv.as_f64();
                let m = &mut self.m[idx];
                let v = &mut self.v[idx];
                *m = self.beta1 * *m + (1.0 - self.beta1) * gv;
                *v = self.beta2 * *v + (1.0 - self.beta2) * gv * gv;
                *pv -= T::from_f64(step * *m / (v.sqrt() + self.eps * c2.sqrt()));
                idx += 1;
            }
        }
    }
}

/// Rescales `grads` so their global L2 norm is at most `max_norm`. Returns
/// the norm before clipping.
pub fn clip_global_norm<T: Scalar>(grads: &mut Gradients<T>, max_norm: f64) -> f64 {
    let norm = grads.global_norm();
    if norm > max_norm {
        // slight undershoot keeps the rounded result under the ceiling
        let scale = T::from_f64(max_norm / norm * (1.0 - 1e-6));
        for t in grads.0.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= scale);
        }
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{CellKind, Dims};
    use proptest::prelude::*;

    fn tiny() -> Model<f64> {
        Model::zeros(CellKind::Rnn, Dims::new(1, 1, 1, 2).unwrap())
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut m = tiny();
        let mut g = Gradients(m.zeros_like());
        for t in g.0.tensors_mut() {
            t.iter_mut().for_each(|v| *v = 0.3);
        }
        let n = m.stored_param_count();
        let mut adam = Adam::new(n, 1e-3, 0.9, 0.999, 1e-8);
        adam.step(&mut m, &g);
        for v in m.to_flat() {
            assert!((v + 1e-3).abs() < 1e-9, "{v}");
        }
    }

    proptest! {
        #[test]
        fn clipped_norm_never_exceeds_threshold(
            values in proptest::collection::vec(-100.0f32..100.0, 7),
            max in 0.01f64..10.0,
        ) {
            let m = Model::<f32>::zeros(CellKind::Rnn, Dims::new(1, 1, 1, 2).unwrap());
            let mut g = Gradients(m.zeros_like());
            g.0.load_flat(&values).unwrap();
            let before = g.global_norm();
            let reported = clip_global_norm(&mut g, max);
            prop_assert_eq!(reported, before);
            prop_assert!(g.global_norm() <= max);
            if before <= max {
                prop_assert_eq!(g.to_flat(), values);
            }
        }
    }
}
