use std::fmt::Write as _;

use rayon::prelude::*;

use crate::data::SequenceDataset;
use crate::error::{contract, ensure, Error, Result};
use crate::eval::accuracy::{cell_stream, trial_accuracy, TrialStats};
use crate::nn::Model;
use crate::tensor::Scalar;

pub const GRID_CSV_HEADER: &str = "sigma_train,sigma_val,mean_acc,std_acc,trials";
pub const TRIALS_CSV_HEADER: &str = "sigma_train,sigma_val,trial,accuracy";

/// The default axis: 0.0, 0.1, ..., 1.0.
pub fn default_axis() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub mean: f64,
    pub std: f64,
}

/// Mean/std accuracy indexed by `(sigma_train, sigma_val)`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct AccuracyGrid {
    pub sigma_train: Vec<f64>,
    pub sigma_val: Vec<f64>,
    pub trials: usize,
    pub cells: Vec<Cell>,
    /// Per-trial accuracies of each cell; empty when read back from the
    /// summary CSV.
    pub per_trial: Vec<Vec<f64>>,
}

impl AccuracyGrid {
    pub fn get(&self, row: usize, col: usize) -> Cell {
        self.cells[row * self.sigma_val.len() + col]
    }

    pub fn row(&self, row: usize) -> &[Cell] {
        let n = self.sigma_val.len();
        &self.cells[row * n..(row + 1) * n]
    }

    fn index_of(axis: &[f64], v: f64) -> Option<usize> {
        axis.iter().position(|&a| (a - v).abs() < 1e-9)
    }

    pub fn lookup(&self, sigma_train: f64, sigma_val: f64) -> Option<Cell> {
        let r = Self::index_of(&self.sigma_train, sigma_train)?;
        let c = Self::index_of(&self.sigma_val, sigma_val)?;
        Some(self.get(r, c))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(GRID_CSV_HEADER);
        s.push('\n');
        for (r, st) in self.sigma_train.iter().enumerate() {
            for (c, sv) in self.sigma_val.iter().enumerate() {
                let cell = self.get(r, c);
                writeln!(s, "{st},{sv},{},{},{}", cell.mean, cell.std, self.trials).unwrap();
            }
        }
        s
    }

    /// One line per trial, so single trials can be re-derived and checked.
    pub fn trials_to_csv(&self) -> String {
        let mut s = String::from(TRIALS_CSV_HEADER);
        s.push('\n');
        let n = self.sigma_val.len();
        for (i, accs) in self.per_trial.iter().enumerate() {
            let (st, sv) = (self.sigma_train[i / n], self.sigma_val[i % n]);
            for (t, a) in accs.iter().enumerate() {
                writeln!(s, "{st},{sv},{t},{a}").unwrap();
            }
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |m: String| Error::Format {
            path: "<grid csv>".into(),
            message: m,
        };
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(GRID_CSV_HEADER) {
            return Err(bad("missing grid header".into()));
        }
        let mut rows: Vec<(f64, f64, f64, f64, usize)> = Vec::new();
        for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let f: Vec<&str> = line.trim().split(',').collect();
            if f.len() != 5 {
                return Err(bad(format!("line {}: expected 5 fields", n + 2)));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| bad(format!("line {}: {e}", n + 2)))
            };
            let trials = f[4]
                .parse::<usize>()
                .map_err(|e| bad(format!("line {}: {e}", n + 2)))?;
            rows.push((num(f[0])?, num(f[1])?, num(f[2])?, num(f[3])?, trials));
        }
        let mut train_axis: Vec<f64> = Vec::new();
        let mut val_axis: Vec<f64> = Vec::new();
        for r in &rows {
            if Self::index_of(&train_axis, r.0).is_none() {
                train_axis.push(r.0);
            }
            if Self::index_of(&val_axis, r.1).is_none() {
                val_axis.push(r.1);
            }
        }
        if rows.len() != train_axis.len() * val_axis.len() {
            return Err(bad("grid is not rectangular".into()));
        }
        let trials = rows.first().map_or(0, |r| r.4);
        let mut cells = vec![
            Cell {
                mean: f64::NAN,
                std: f64::NAN
            };
            rows.len()
        ];
        for r in &rows {
            let i = Self::index_of(&train_axis, r.0).unwrap() * val_axis.len()
                + Self::index_of(&val_axis, r.1).unwrap();
            cells[i] = Cell {
                mean: r.2,
                std: r.3,
            };
        }
        Ok(Self {
            sigma_train: train_axis,
            sigma_val: val_axis,
            trials,
            cells,
            per_trial: Vec::new(),
        })
    }
}

/// One trained model per row.
pub struct GridRow<'a, T> {
    pub sigma_train: f64,
    pub model: &'a Model<T>,
}

/// Evaluates every `(model, sigma_val)` pair over `trials` noisy passes.
///
/// Every trial of every cell owns an independent noise stream keyed by
/// `(row, col, trial)`, so the grid is identical however the work is
/// scheduled across threads.
pub fn grid_evaluate<T: Scalar>(
    rows: &[GridRow<'_, T>],
    sigma_vals: &[f64],
    trials: usize,
    seed: u64,
    data: &SequenceDataset,
) -> Result<AccuracyGrid> {
    ensure!(
        !rows.is_empty() && !sigma_vals.is_empty(),
        "empty grid axis"
    );
    ensure!(trials >= 1, "trials must be >= 1");
    let (kind, dims) = (rows[0].model.kind(), rows[0].model.dims());
    if rows
        .iter()
        .any(|r| r.model.kind() != kind || r.model.dims() != dims)
    {
        return Err(contract("grid checkpoints must share one architecture"));
    }
    ensure!(
        sigma_vals.iter().all(|&s| s >= 0.0 && s.is_finite()),
        "sigma_val entries must be >= 0"
    );
    data.check_dims(&dims)?;

    // Noiseless cells need a single pass.
    let work: Vec<(usize, usize, usize)> = (0..rows.len())
        .flat_map(|r| {
            sigma_vals.iter().enumerate().flat_map(move |(c, &s)| {
                let n = if s == 0.0 { 1 } else { trials };
                (0..n).map(move |t| (r, c, t))
            })
        })
        .collect();
    let results = work
        .par_iter()
        .map(|&(r, c, t)| {
            trial_accuracy(
                rows[r].model,
                data,
                sigma_vals[c],
                seed,
                cell_stream(r, c, t),
            )
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut per_cell: Vec<Vec<f64>> = vec![Vec::new(); rows.len() * sigma_vals.len()];
    for (&(r, c, _), acc) in work.iter().zip(results) {
        per_cell[r * sigma_vals.len() + c].push(acc);
    }
    let stats: Vec<TrialStats> = per_cell
        .into_iter()
        .map(|accs| {
            if accs.len() == 1 {
                TrialStats::from_accuracies(vec![accs[0]; trials])
            } else {
                TrialStats::from_accuracies(accs)
            }
        })
        .collect();
    let cells = stats
        .iter()
        .map(|s| Cell {
            mean: s.mean,
            std: s.std,
        })
        .collect();
    Ok(AccuracyGrid {
        sigma_train: rows.iter().map(|r| r.sigma_train).collect(),
        sigma_val: sigma_vals.to_vec(),
        trials,
        cells,
        per_trial: stats.into_iter().map(|s| s.accuracies).collect(),
    })
}
