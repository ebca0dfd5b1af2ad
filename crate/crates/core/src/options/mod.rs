//! Call-option trade accounting, the cost and breakeven model, and
//! percentile-bucketed profitability statistics.

mod backtest;
mod stats;
mod trade;

pub use backtest::{
    percentile_backtest, select_percentile, write_backtest_tsv, BacktestOptions, BacktestReport,
    BucketKey, Leg, PercentileLeg, REPORT_HEADER,
};
pub use stats::{bucket_stats, BucketFilter, BucketStats, IvFilter, OtmRange, WtlMode};
pub use trade::{
    breakeven_slippage, call_price, initial_capital, net_pnl, otm_range, trade, trade_with_costs,
    CostParams, Side, TradeOutcome,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptionsError {
    #[error("entry and exit quotes are for different instruments")]
    InstrumentMismatch,
    #[error("exit quote precedes entry quote")]
    ExitBeforeEntry,
    #[error("entry call price is zero")]
    ZeroEntryPrice,
    #[error("no trades could be matched against the quotes")]
    NoMatchingQuotes,
    #[error("percentile {0} outside (0, 1]")]
    InvalidPercentile(f64),
    #[error("cost parameters must be finite and non-negative")]
    InvalidCosts,
}
