//! Stratified holdout, classification metrics and the seven-model grid.

mod grid;
mod metrics;
mod split;

pub use grid::{median, run_grid, GridConfig, GridInput, GridReport, GridRow, MedianRow, ModelSet, MutationSelection, SeedSelection};
pub use metrics::{auc, evaluate, evaluate_scores, MetricsReport};
pub use split::{stratified_split, FitRows, SplitIndices};
