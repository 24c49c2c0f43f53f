//! Minibatch forward and backward passes built on GEMM.
//!
//! Numerically this is the same network as [`Model::forward_with`] and
//! [`Model::loss_and_backward`]: gate weights are stacked into one
//! `gates·hidden × (input + hidden)` matrix, samples are rows, and each
//! sample draws its noise from its own generator in the same order as the
//! per-sample path (per step: forget, input, candidate, output; then the
//! classifier). Only summation order differs.

use crate::error::{ensure, Result};
use crate::nn::lstm::{CANDIDATE, FORGET, INPUT, OUTPUT};
use crate::nn::model::{CellKind, Dims, Gradients, Model};
use crate::nn::softmax::{argmax, log_sum_exp, softmax};
use crate::rng::NoiseRng;
use crate::tensor::{gemm, sigmoid, Scalar, View};

struct Packed<T> {
    kind: CellKind,
    dims: Dims,
    /// Rows of all cell gates, `gate_rows × concat`.
    w: Vec<T>,
    b: Vec<T>,
    gate_rows: usize,
    out_w: Vec<T>,
    out_b: Vec<T>,
}

impl<T: Scalar> Packed<T> {
    fn new(model: &Model<T>) -> Self {
        let (layers, out) = match model {
            Model::Lstm(m) => (m.gates.iter().collect::<Vec<_>>(), &m.out),
            Model::Rnn(m) => (vec![&m.cell], &m.out),
        };
        let dims = model.dims();
        Self {
            kind: model.kind(),
            dims,
            w: layers
                .iter()
                .flat_map(|l| l.w.as_slice().iter().copied())
                .collect(),
            b: layers.iter().flat_map(|l| l.b.iter().copied()).collect(),
            gate_rows: layers.len() * dims.hidden,
            out_w: out.w.as_slice().to_vec(),
            out_b: out.b.as_slice().to_vec(),
        }
    }
}

/// Stored activations of one minibatch forward pass.
pub struct BatchTrace<T> {
    pub batch: usize,
    dims: Dims,
    kind: CellKind,
    /// Per step, `[x_t ; h_{t-1}]` rows (`batch × concat`).
    z: Vec<Vec<T>>,
    /// Per step, post-nonlinearity gate values (`batch × gate_rows`).
    act: Vec<Vec<T>>,
    /// Per step, LSTM internal state and its tanh (`batch × hidden`).
    c: Vec<Vec<T>>,
    tanh_c: Vec<Vec<T>>,
    pub h_last: Vec<T>,
    pub logits: Vec<T>,
}

impl<T: Scalar> BatchTrace<T> {
    pub fn predictions(&self) -> Vec<usize> {
        self.logits
            .chunks_exact(self.dims.classes)
            .map(argmax)
            .collect()
    }

    pub fn probs(&self, b: usize) -> Vec<T> {
        let c = self.dims.classes;
        softmax(&self.logits[b * c..(b + 1) * c])
    }
}

fn check_inputs<T>(
    dims: &Dims,
    inputs: &[&[f32]],
    sigma: T,
    rngs: &Option<&mut [NoiseRng]>,
) -> Result<()>
where
    T: Scalar,
{
    ensure!(!inputs.is_empty(), "empty batch");
    let want = dims.steps * dims.input;
    ensure!(
        inputs.iter().all(|x| x.len() == want),
        "every sample must hold steps × input = {want} values"
    );
    ensure!(
        sigma >= T::zero() && sigma.is_finite(),
        "noise sigma must be finite and >= 0"
    );
    if sigma > T::zero() {
        ensure!(
            rngs.as_ref().is_some_and(|r| r.len() == inputs.len()),
            "noisy batch needs one generator per sample"
        );
    }
    Ok(())
}

fn run<T: Scalar>(
    p: &Packed<T>,
    inputs: &[&[f32]],
    sigma: T,
    mut rngs: Option<&mut [NoiseRng]>,
    keep: bool,
) -> Result<BatchTrace<T>> {
    check_inputs(&p.dims, inputs, sigma, &rngs)?;
    let noisy = sigma > T::zero();
    let d = p.dims;
    let (bsz, k, hd, g) = (inputs.len(), d.concat(), d.hidden, p.gate_rows);

    let mut h = vec![T::zero(); bsz * hd];
    let mut c = vec![T::zero(); bsz * hd];
    let mut trace = BatchTrace {
        batch: bsz,
        dims: d,
        kind: p.kind,
        z: Vec::new(),
        act: Vec::new(),
        c: Vec::new(),
        tanh_c: Vec::new(),
        h_last: Vec::new(),
        logits: Vec::new(),
    };
    let mut z = vec![T::zero(); bsz * k];
    let mut act = vec![T::zero(); bsz * g];
    let mut tanh_c = vec![T::zero(); bsz * hd];

    for t in 0..d.steps {
        for b in 0..bsz {
            let row = &mut z[b * k..(b + 1) * k];
            for (dst, &src) in row[..d.input]
                .iter_mut()
                .zip(&inputs[b][t * d.input..(t + 1) * d.input])
            {
                *dst = T::from_f64(src as f64);
            }
            row[d.input..].copy_from_slice(&h[b * hd..(b + 1) * hd]);
            act[b * g..(b + 1) * g].copy_from_slice(&p.b);
        }
        gemm(
            T::one(),
            View::row_major(&z, bsz, k),
            View::row_major(&p.w, g, k).t(),
            T::one(),
            &mut act,
            g,
        );
        if noisy {
            let rngs = rngs.as_deref_mut().expect("checked above");
            for (b, rng) in rngs.iter_mut().enumerate() {
                for gate in act[b * g..(b + 1) * g].chunks_exact_mut(hd) {
                    rng.add_gaussian(gate, sigma);
                }
            }
        }
        match p.kind {
            CellKind::Lstm => {
                for b in 0..bsz {
                    let a = &mut act[b * g..(b + 1) * g];
                    for (gate, block) in a.chunks_exact_mut(hd).enumerate() {
                        if gate == CANDIDATE {
                            block.iter_mut().for_each(|v| *v = v.tanh());
                        } else {
                            block.iter_mut().for_each(|v| *v = sigmoid(*v));
                        }
                    }
                    for j in 0..hd {
                        let idx = b * hd + j;
                        let cv =
                            a[FORGET * hd + j] * c[idx] + a[INPUT * hd + j] * a[CANDIDATE * hd + j];
                        c[idx] = cv;
                        tanh_c[idx] = cv.tanh();
                        h[idx] = a[OUTPUT * hd + j] * tanh_c[idx];
                    }
                }
                if keep {
                    trace.c.push(c.clone());
                    trace.tanh_c.push(tanh_c.clone());
                }
            }
            CellKind::Rnn => {
                act.iter_mut().for_each(|v| *v = v.tanh());
                h.copy_from_slice(&act);
            }
        }
        if keep {
            trace.z.push(z.clone());
            trace.act.push(act.clone());
        }
    }

    let cls = d.classes;
    let mut logits = Vec::with_capacity(bsz * cls);
    for _ in 0..bsz {
        logits.extend_from_slice(&p.out_b);
    }
    gemm(
        T::one(),
        View::row_major(&h, bsz, hd),
        View::row_major(&p.out_w, cls, hd).t(),
        T::one(),
        &mut logits,
        cls,
    );
    if noisy {
        let rngs = rngs.expect("checked above");
        for (b, rng) in rngs.iter_mut().enumerate() {
            rng.add_gaussian(&mut logits[b * cls..(b + 1) * cls], sigma);
        }
    }
    trace.h_last = h;
    trace.logits = logits;
    Ok(trace)
}

/// Forward pass over a minibatch, keeping what the backward pass needs.
///
/// `inputs[b]` is sample `b` flattened as `steps × input`. With `sigma > 0`
/// sample `b` draws all of its noise from `rngs[b]`.
pub fn forward_batch<T: Scalar>(
    model: &Model<T>,
    inputs: &[&[f32]],
    sigma: T,
    rngs: Option<&mut [NoiseRng]>,
) -> Result<BatchTrace<T>> {
    run(&Packed::new(model), inputs, sigma, rngs, true)
}

/// Logits only; keeps no per-step activations.
pub fn infer_batch<T: Scalar>(
    model: &Model<T>,
    inputs: &[&[f32]],
    sigma: T,
    rngs: Option<&mut [NoiseRng]>,
) -> Result<Vec<T>> {
    Ok(run(&Packed::new(model), inputs, sigma, rngs, false)?.logits)
}

/// Mean cross-entropy over the batch and its gradient.
pub fn backward_batch<T: Scalar>(
    model: &Model<T>,
    trace: &BatchTrace<T>,
    labels: &[u8],
) -> Result<(f64, Gradients<T>)> {
    let p = Packed::new(model);
    let d = p.dims;
    ensure!(
        p.kind == trace.kind && d == trace.dims,
        "trace/model mismatch"
    );
    ensure!(
        !trace.z.is_empty(),
        "trace was recorded without activations"
    );
    let bsz = trace.batch;
    ensure!(
        labels.len() == bsz,
        "{} labels for a batch of {bsz}",
        labels.len()
    );
    ensure!(
        labels.iter().all(|&l| (l as usize) < d.classes),
        "label out of range for {} classes",
        d.classes
    );
    let (k, hd, g, cls) = (d.concat(), d.hidden, p.gate_rows, d.classes);
    let scale = T::one() / T::from_f64(bsz as f64);

    let mut loss = 0.0f64;
    let mut dlogits = vec![T::zero(); bsz * cls];
    for b in 0..bsz {
        let row = &trace.logits[b * cls..(b + 1) * cls];
        let label = labels[b] as usize;
        loss += (log_sum_exp(row) - row[label]).as_f64();
        let probs = softmax(row);
        for (j, pj) in probs.into_iter().enumerate() {
            let target = if j == label { T::one() } else { T::zero() };
            dlogits[b * cls + j] = (pj - target) * scale;
        }
    }
    loss /= bsz as f64;

    let mut gw = vec![T::zero(); g * k];
    let mut gb = vec![T::zero(); g];
    let mut gout_w = vec![T::zero(); cls * hd];
    let mut gout_b = vec![T::zero(); cls];

    gemm(
        T::one(),
        View::row_major(&dlogits, bsz, cls).t(),
        View::row_major(&trace.h_last, bsz, hd),
        T::zero(),
        &mut gout_w,
        hd,
    );
    for row in dlogits.chunks_exact(cls) {
        for (a, &v) in gout_b.iter_mut().zip(row) {
            *a += v;
        }
    }
    let mut dh = vec![T::zero(); bsz * hd];
    gemm(
        T::one(),
        View::row_major(&dlogits, bsz, cls),
        View::row_major(&p.out_w, cls, hd),
        T::zero(),
        &mut dh,
        hd,
    );

    let one = T::one();
    let mut dc = vec![T::zero(); bsz * hd];
    let mut da = vec![T::zero(); bsz * g];
    let mut dz = vec![T::zero(); bsz * k];
    let zeros = vec![T::zero(); bsz * hd];
    for t in (0..d.steps).rev() {
        let act = &trace.act[t];
        match p.kind {
            CellKind::Lstm => {
                let c_prev = if t == 0 { &zeros } else { &trace.c[t - 1] };
                let tanh_c = &trace.tanh_c[t];
                for b in 0..bsz {
                    let a = &act[b * g..(b + 1) * g];
                    let out = &mut da[b * g..(b + 1) * g];
                    for j in 0..hd {
                        let idx = b * hd + j;
                        let (f, i, gc, o) = (
                            a[FORGET * hd + j],
                            a[INPUT * hd + j],
                            a[CANDIDATE * hd + j],
                            a[OUTPUT * hd + j],
                        );
                        let tc = tanh_c[idx];
                        let dck = dc[idx] + dh[idx] * o * (one - tc * tc);
                        out[FORGET * hd + j] = dck * c_prev[idx] * f * (one - f);
                        out[INPUT * hd + j] = dck * gc * i * (one - i);
                        out[CANDIDATE * hd + j] = dck * i * (one - gc * gc);
                        out[OUTPUT * hd + j] = dh[idx] * tc * o * (one - o);
                        dc[idx] = dck * f;
                    }
                }
            }
            CellKind::Rnn => {
                for ((o, &hv), &dv) in da.iter_mut().zip(act.iter()).zip(dh.iter()) {
                    *o = dv * (one - hv * hv);
                }
            }
        }
        gemm(
            T::one(),
            View::row_major(&da, bsz, g).t(),
            View::row_major(&trace.z[t], bsz, k),
            T::one(),
            &mut gw,
            k,
        );
        for row in da.chunks_exact(g) {
            for (a, &v) in gb.iter_mut().zip(row) {
                *a += v;
            }
        }
        if t > 0 {
            gemm(
                T::one(),
                View::row_major(&da, bsz, g),
                View::row_major(&p.w, g, k),
                T::zero(),
                &mut dz,
                k,
            );
            for b in 0..bsz {
                dh[b * hd..(b + 1) * hd].copy_from_slice(&dz[b * k + d.input..(b + 1) * k]);
            }
        }
    }

    let mut grads = model.zeros_like();
    let mut flat = Vec::with_capacity(model.stored_param_count());
    let per_gate = hd * k;
    for gate in 0..g / hd {
        flat.extend_from_slice(&gw[gate * per_gate..(gate + 1) * per_gate]);
        flat.extend_from_slice(&gb[gate * hd..(gate + 1) * hd]);
    }
    flat.extend_from_slice(&gout_w);
    flat.extend_from_slice(&gout_b);
    grads.load_flat(&flat)?;
    Ok((loss, Gradients(grads)))
}
