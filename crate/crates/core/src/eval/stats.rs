//! Weight and hidden-state statistics.

use std::fmt::Write as _;

use crate::data::SequenceDataset;
use crate::error::{ensure, Result};
use crate::nn::{Model, NoiseSpec};
use crate::rng::{stream_key, NoiseRng};
use crate::tensor::Scalar;

pub const HISTOGRAM_CSV_HEADER: &str = "series,bin_left,bin_right,count";
const STATE_DOMAIN: u64 = 0x57A7E;

/// Mean of squares over every trainable parameter.
pub fn weight_power<T: Scalar>(model: &Model<T>) -> f64 {
    let (sum, n) = model
        .tensors()
        .iter()
        .flat_map(|t| t.iter())
        .fold((0.0, 0usize), |(s, n), v| (s + v.as_f64().powi(2), n + 1));
    sum / n as f64
}

/// Sample standard deviation of every trainable parameter.
pub fn weight_std<T: Scalar>(model: &Model<T>) -> f64 {
    let flat: Vec<f64> = model.to_flat().iter().map(|v| v.as_f64()).collect();
    let n = flat.len() as f64;
    let mean = flat.iter().sum::<f64>() / n;
    (flat.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Equal-width bins over `[edges[0], edges[last]]`; the last bin is closed.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Self {
        assert!(
            bins >= 1 && hi > lo,
            "histogram needs bins >= 1 and hi > lo"
        );
        let width = (hi - lo) / bins as f64;
        let mut edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
        edges[bins] = hi;
        Self {
            edges,
            counts: vec![0; bins],
        }
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn bin_of(&self, v: f64) -> Option<usize> {
        let (lo, hi) = (self.edges[0], self.edges[self.bins()]);
        if !(lo..=hi).contains(&v) {
            return None;
        }
        let i = ((v - lo) / (hi - lo) * self.bins() as f64) as usize;
        Some(i.min(self.bins() - 1))
    }

    /// Counts `v`; values outside the range are dropped and reported.
    pub fn add(&mut self, v: f64) -> bool {
        match self.bin_of(v) {
            Some(i) => {
                self.counts[i] += 1;
                true
            }
            None => false,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn write_csv_rows(&self, series: &str, out: &mut String) {
        for (i, c) in self.counts.iter().enumerate() {
            writeln!(out, "{series},{},{},{c}", self.edges[i], self.edges[i + 1]).unwrap();
        }
    }
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Per-model histograms over one shared set of edges.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightHistograms {
    pub histograms: Vec<Histogram>,
    pub power: Vec<f64>,
    pub std: Vec<f64>,
}

pub fn weight_histogram<T: Scalar>(models: &[&Model<T>], bins: usize) -> Result<WeightHistograms> {
    ensure!(
        !models.is_empty(),
        "weight histogram needs at least one model"
    );
    ensure!(bins >= 1, "bins must be >= 1");
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for m in models {
        for v in m.to_flat() {
            lo = lo.min(v.as_f64());
            hi = hi.max(v.as_f64());
        }
    }
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let histograms = models
        .iter()
        .map(|m| {
            let mut h = Histogram::new(lo, hi, bins);
            for v in m.to_flat() {
                h.add(v.as_f64());
            }
            h
        })
        .collect();
    Ok(WeightHistograms {
        histograms,
        power: models.iter().map(|m| weight_power(*m)).collect(),
        std: models.iter().map(|m| weight_std(*m)).collect(),
    })
}

/// Per-step distributions of the output states `h_t` and LSTM internal
/// states `c_t` under noisy inference.
#[derive(Clone, Debug, PartialEq)]
pub struct StateHistogramSet {
    pub samples: usize,
    pub hidden: usize,
    /// `output[t]` covers `h_{t+1}` over `[-1, 1]`.
    pub output: Vec<Histogram>,
    /// `internal[t]` covers `c_{t+1}`; empty for vanilla RNNs.
    pub internal: Vec<Histogram>,
    pub output_variance: Vec<f64>,
    pub internal_variance: Vec<f64>,
    /// N(0, 1) density at the output-state bin centres.
    pub output_reference: Vec<f64>,
    /// N(0, 1) density at the internal-state bin centres.
    pub internal_reference: Vec<f64>,
}

fn variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)
}

pub fn state_histograms<T: Scalar>(
    model: &Model<T>,
    data: &SequenceDataset,
    samples: usize,
    sigma_val: f64,
    bins: usize,
    seed: u64,
) -> Result<StateHistogramSet> {
    data.check_dims(&model.dims())?;
    let n = samples.min(data.len());
    ensure!(n >= 1, "state histograms need at least one sample");
    ensure!(bins >= 1, "bins must be >= 1");
    let spec = NoiseSpec::new(sigma_val)?;
    let d = model.dims();

    let mut h_vals: Vec<Vec<f64>> = vec![Vec::with_capacity(n * d.hidden); d.steps];
    let mut c_vals: Vec<Vec<f64>> = vec![Vec::new(); d.steps];
    for i in 0..n {
        let mut rng = NoiseRng::new(seed, stream_key(&[STATE_DOMAIN, i as u64]));
        let trace = model.forward(&data.sequence::<T>(i), &spec, &mut rng)?;
        for (t, h) in trace.output_states().into_iter().enumerate() {
            h_vals[t].extend(h.iter().map(|v| v.as_f64()));
        }
        if let Some(cs) = trace.internal_states() {
            for (t, c) in cs.into_iter().enumerate() {
                c_vals[t].extend(c.iter().map(|v| v.as_f64()));
            }
        }
    }

    let fill = |vals: &[Vec<f64>], lo: f64, hi: f64| -> Vec<Histogram> {
        vals.iter()
            .map(|vs| {
                let mut h = Histogram::new(lo, hi, bins);
                for &v in vs {
                    h.add(v);
                }
                h
            })
            .collect()
    };
    let output = fill(&h_vals, -1.0, 1.0);
    let has_c = c_vals.iter().any(|v| !v.is_empty());
    let c_max = c_vals
        .iter()
        .flat_map(|v| v.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0);
    let internal = if has_c {
        fill(&c_vals, -c_max, c_max)
    } else {
        Vec::new()
    };
    let output_reference = output[0].centers().into_iter().map(normal_pdf).collect();
    let internal_reference = internal
        .first()
        .map(|h| h.centers().into_iter().map(normal_pdf).collect())
        .unwrap_or_default();
    Ok(StateHistogramSet {
        samples: n,
        hidden: d.hidden,
        output_variance: h_vals.iter().map(|v| variance(v)).collect(),
        internal_variance: if has_c {
            c_vals.iter().map(|v| variance(v)).collect()
        } else {
            Vec::new()
        },
        output,
        internal,
        output_reference,
        internal_reference,
    })
}

impl StateHistogramSet {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(HISTOGRAM_CSV_HEADER);
        s.push('\n');
        for (t, h) in self.output.iter().enumerate() {
            h.write_csv_rows(&format!("h_t{}", t + 1), &mut s);
        }
        for (t, h) in self.internal.iter().enumerate() {
            h.write_csv_rows(&format!("c_t{}", t + 1), &mut s);
        }
        s
    }
}

impl WeightHistograms {
    pub fn to_csv(&self, names: &[String]) -> String {
        let mut s = String::from(HISTOGRAM_CSV_HEADER);
        s.push('\n');
        for (h, name) in self.histograms.iter().zip(names) {
            h.write_csv_rows(name, &mut s);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{CellKind, Dims};

    #[test]
    fn power_of_simple_parameter_sets() {
        let d = Dims::new(1, 1, 1, 2).unwrap();
        let mut m = Model::<f64>::zeros(CellKind::Rnn, d);
        assert_eq!(weight_power(&m), 0.0);
        let ones: Vec<f64> = (0..7)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        m.load_flat(&ones).unwrap();
        assert_eq!(weight_power(&m), 1.0);
    }

    #[test]
    fn zero_model_histogram() {
        let m = Model::<f32>::zeros(CellKind::Lstm, Dims::new(2, 2, 3, 2).unwrap());
        let h = weight_histogram(&[&m], 11).unwrap();
        let hist = &h.histograms[0];
        assert_eq!(hist.total() as usize, m.param_count());
        let zero_bin = hist.bin_of(0.0).unwrap();
        assert_eq!(hist.counts[zero_bin] as usize, m.param_count());
    }

    #[test]
    fn histogram_edges_and_closure() {
        let mut h = Histogram::new(-1.0, 1.0, 4);
        assert!(h.add(1.0));
        assert!(h.add(-1.0));
        assert!(!h.add(1.0001));
        assert_eq!(h.counts, vec![1, 0, 0, 1]);
        assert_eq!(h.centers(), vec![-0.75, -0.25, 0.25, 0.75]);
        let mut csv = String::new();
        h.write_csv_rows("x", &mut csv);
        assert_eq!(csv.lines().next().unwrap(), "x,-1,-0.5,1");
    }

    #[test]
    fn zero_model_states_sit_at_zero() {
        let d = Dims::new(4, 3, 5, 2).unwrap();
        let m = Model::<f64>::zeros(CellKind::Lstm, d);
        let data = SequenceDataset::new(4, 3, vec![0.5; 2 * 12], vec![0, 1]).unwrap();
        let s = state_histograms(&m, &data, 2, 0.0, 9, 1).unwrap();
        for h in &s.output {
            assert_eq!(h.total(), 10);
            assert_eq!(h.counts[h.bin_of(0.0).unwrap()], 10);
        }
        assert_eq!(s.internal.len(), 4);
        assert!((s.output_reference[4] - normal_pdf(0.0)).abs() < 1e-12);
    }
}
