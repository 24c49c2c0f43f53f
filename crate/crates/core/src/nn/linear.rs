use crate::error::{ensure, Result};
use crate::nn::noise::{NoiseSource, NoiseSpec};
use crate::rng::NoiseRng;
use crate::tensor::{matvec, Matrix, Scalar, Vector};

/// Affine map `W·x + b` whose output picks up additive noise.
#[derive(Clone, Debug, PartialEq)]
pub struct NoisyLinear<T> {
    pub w: Matrix<T>,
    pub b: Vector<T>,
}

impl<T: Scalar> NoisyLinear<T> {
    pub fn new(w: Matrix<T>, b: Vector<T>) -> Result<Self> {
        ensure!(
            w.rows() == b.len(),
            "layer weight has {} rows but bias has {} entries",
            w.rows(),
            b.len()
        );
        Ok(Self { w, b })
    }

    pub fn zeros(out: usize, inp: usize) -> Self {
        Self {
            w: Matrix::zeros(out, inp),
            b: Vector::zeros(out),
        }
    }

    pub fn out_dim(&self) -> usize {
        self.w.rows()
    }

    pub fn in_dim(&self) -> usize {
        self.w.cols()
    }

    pub fn param_count(&self) -> usize {
        self.w.rows() * self.w.cols() + self.b.len()
    }

    /// `W·x + b (+ z)`, returning the sampled `z` when one was added.
    pub fn forward_with(
        &self,
        x: &Vector<T>,
        noise: &mut NoiseSource<'_, T>,
    ) -> Result<(Vector<T>, Option<Vector<T>>)> {
        let mut y = matvec(&self.w, x)?;
        for (v, &b) in y.as_mut_slice().iter_mut().zip(self.b.iter()) {
            *v += b;
        }
        let z = noise.draw(self.out_dim())?;
        if let Some(z) = &z {
            for (v, &n) in y.as_mut_slice().iter_mut().zip(z.iter()) {
                *v += n;
            }
        }
        Ok((y, z))
    }
}

/// Pre-activation `W·x + b + z` with `z ~ N(0, sigma²)` drawn fresh per call.
pub fn noisy_affine<T: Scalar>(
    layer: &NoisyLinear<T>,
    x: &Vector<T>,
    noise: &NoiseSpec,
    rng: &mut NoiseRng,
) -> Result<Vector<T>> {
    ensure!(
        layer.in_dim() == x.len(),
        "layer expects input of length {}, got {}",
        layer.in_dim(),
        x.len()
    );
    Ok(layer
        .forward_with(x, &mut NoiseSource::fresh(noise, rng))?
        .0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layer() -> NoisyLinear<f64> {
        NoisyLinear::new(
            Matrix::from_fn(3, 2, |i, j| 0.3 * i as f64 - 0.7 * j as f64 + 0.1),
            Vector::from(vec![0.5, -0.25, 1.0]),
        )
        .unwrap()
    }

    #[test]
    fn zero_sigma_is_plain_affine() {
        let l = layer();
        let x = Vector::from(vec![0.9, -1.3]);
        let mut rng = NoiseRng::new(1, 1);
        let y = noisy_affine(&l, &x, &NoiseSpec::new(0.0).unwrap(), &mut rng).unwrap();
        let mut expect = matvec(&l.w, &x).unwrap();
        for (e, b) in expect.as_mut_slice().iter_mut().zip(l.b.iter()) {
            *e += b;
        }
        assert!(y
            .iter()
            .zip(expect.iter())
            .all(|(a, b)| a.to_bits() == b.to_bits()));
        let off = noisy_affine(&l, &x, &NoiseSpec::off(), &mut rng).unwrap();
        assert_eq!(off, y);
    }

    #[test]
    fn pure_noise_has_unit_variance() {
        let l = NoisyLinear::<f64>::zeros(4, 3);
        let x = Vector::from(vec![1.0, 2.0, 3.0]);
        let spec = NoiseSpec::new(1.0).unwrap();
        let mut rng = NoiseRng::new(11, 0);
        let n = 100_000;
        let mut sum = [0.0f64; 4];
        let mut sq = [0.0f64; 4];
        for _ in 0..n {
            let y = noisy_affine(&l, &x, &spec, &mut rng).unwrap();
            for k in 0..4 {
                sum[k] += y[k];
                sq[k] += y[k] * y[k];
            }
        }
        for k in 0..4 {
            let mean = sum[k] / n as f64;
            let var = (sq[k] - n as f64 * mean * mean) / (n as f64 - 1.0);
            assert!((0.99..=1.01).contains(&var), "element {k} variance {var}");
        }
    }

    #[test]
    fn determinism_contract() {
        let l = layer();
        let x = Vector::from(vec![0.2, 0.4]);
        let spec = NoiseSpec::new(0.5).unwrap();
        let mut a = NoiseRng::new(8, 8);
        let mut b = NoiseRng::new(8, 8);
        let ya = noisy_affine(&l, &x, &spec, &mut a).unwrap();
        let yb = noisy_affine(&l, &x, &spec, &mut b).unwrap();
        assert_eq!(ya, yb);
        let yc = noisy_affine(&l, &x, &spec, &mut a).unwrap();
        assert_ne!(ya, yc);
    }

    #[test]
    fn shape_mismatch() {
        let mut rng = NoiseRng::new(0, 0);
        let r = noisy_affine(&layer(), &Vector::zeros(5), &NoiseSpec::off(), &mut rng);
        assert!(r.is_err());
        assert!(NoisyLinear::new(Matrix::<f64>::zeros(2, 2), Vector::zeros(3)).is_err());
    }
}
