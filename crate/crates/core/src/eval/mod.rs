//! Noisy-inference accuracy, robustness grids and weight/state statistics.

pub mod accuracy;
pub mod grid;
pub mod stats;

pub use accuracy::{evaluate, mean_loss, trial_accuracy, TrialStats};
pub use grid::{default_axis, grid_evaluate, AccuracyGrid, Cell, GridRow, GRID_CSV_HEADER};
pub use stats::{
    state_histograms, weight_histogram, weight_power, weight_std, Histogram, StateHistogramSet,
    WeightHistograms, HISTOGRAM_CSV_HEADER,
};
