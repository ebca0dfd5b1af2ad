//! Predictive regressions of returns and volatility on net inflows.

mod grid;
mod ols;
mod significance;

pub use grid::{
    daily_weekly_grid, grid_to_json, grid_to_tsv, run_grid, CellError, GridData, GridSpec,
    HeatmapCell, Model, Pair, Sign, Target, DAILY_WEEKLY_HORIZONS, INTRADAY_HORIZONS,
};
pub use ols::{
    newey_west_lags, ols, ols_fit, ols_fit_with, predict, split_evaluate, Covariance, OlsFit,
    OlsOptions, SplitEvaluation,
};
pub use significance::{p_value, significance, stars_for_p, Stars};

use thiserror::Error;

use crate::series::SeriesError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegressError {
    #[error("design matrix is rank deficient at column {column}")]
    RankDeficient { column: usize },
    #[error("{n} observations; at least {required} required")]
    TooFewObservations { n: usize, required: usize },
    #[error("split fraction {0} outside (0, 1)")]
    InvalidSplit(f64),
    #[error(transparent)]
    Series(#[from] SeriesError),
}
