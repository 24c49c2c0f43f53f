use crate::nn::{CellKind, Dims, Model};
use crate::rng::NoiseRng;
use crate::tensor::{Matrix, Scalar};

pub(crate) const INIT_STREAM: u64 = 1;

fn glorot<T: Scalar>(w: &mut Matrix<T>, rng: &mut NoiseRng) {
    let limit = (6.0 / (w.rows() + w.cols()) as f64).sqrt();
    for v in w.as_mut_slice() {
        *v = T::from_f64((rng.uniform::<f64>() * 2.0 - 1.0) * limit);
    }
}

/// Glorot-uniform weights, zero biases, forget-gate bias 1.
pub fn init_params<T: Scalar>(kind: CellKind, dims: Dims, seed: u64) -> Model<T> {
    let mut rng = NoiseRng::new(seed, INIT_STREAM);
    let mut model = Model::zeros(kind, dims);
    match &mut model {
        Model::Lstm(m) => {
            for gate in m.gates.iter_mut() {
                glorot(&mut gate.w, &mut rng);
            }
            glorot(&mut m.out.w, &mut rng);
            m.gates[crate::nn::lstm::FORGET]
                .b
                .as_mut_slice()
                .iter_mut()
                .for_each(|b| *b = T::one());
        }
        Model::Rnn(m) => {
            glorot(&mut m.cell.w, &mut rng);
            glorot(&mut m.out.w, &mut rng);
        }
    }
    model
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Arch;

    #[test]
    fn same_seed_same_params() {
        let a = init_params::<f32>(CellKind::Lstm, Arch::LstmRows.dims(), 9);
        let b = init_params::<f32>(CellKind::Lstm, Arch::LstmRows.dims(), 9);
        assert_eq!(a, b);
        let c = init_params::<f32>(CellKind::Lstm, Arch::LstmRows.dims(), 10);
        assert_ne!(a, c);
    }

    #[test]
    fn biases_and_weight_moments() {
        let m = init_params::<f64>(CellKind::Lstm, Arch::LstmRows.dims(), 1);
        let Model::Lstm(l) = &m else { unreachable!() };
        assert!(l.gates[0].b.iter().all(|&b| b == 1.0));
        for g in 1..4 {
            assert!(l.gates[g].b.iter().all(|&b| b == 0.0));
        }
        assert!(l.out.b.iter().all(|&b| b == 0.0));
        let weights: Vec<f64> = l
            .gates
            .iter()
            .chain(std::iter::once(&l.out))
            .flat_map(|g| g.w.as_slice().iter().copied())
            .collect();
        let mean = weights.iter().sum::<f64>() / weights.len() as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        let limit = (6.0f64 / (128.0 + 156.0)).sqrt();
        assert!(l.gates[0].w.as_slice().iter().all(|v| v.abs() <= limit));

        let r = init_params::<f64>(CellKind::Rnn, Arch::RnnRows.dims(), 1);
        let Model::Rnn(r) = &r else { unreachable!() };
        assert!(r.cell.b.iter().all(|&b| b == 0.0));
    }
}
