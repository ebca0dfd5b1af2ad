//! Command-line flags and their config-file counterparts.
//!
//! Every flag is optional at parse time so that values can come from the
//! config file. A command's own table (`[regress]`, `[backtest]`, ...) fills
//! gaps left by the flags, and `[inputs]` fills input paths last.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(
    name = "flowcast",
    version,
    about = "Exchange-flow analytics for crypto markets"
)]
pub struct Cli {
    /// TOML config file; flags take precedence over its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate input files and print a summary.
    IngestCheck(InputArgs),
    /// Fit the predictive-regression heatmap.
    Regress(RegressArgs),
    /// Detect extreme net-inflow hours and export case windows.
    Events(EventsArgs),
    /// Percentile-triggered option backtest.
    Backtest(BacktestArgs),
    /// Generate a synthetic dataset.
    Synth(SynthArgs),
    /// Render outputs of earlier commands as a Markdown report.
    Report(ReportArgs),
}

pub trait Merge {
    /// Fills unset fields of `self` from `fallback`.
    fn merge(self, fallback: Self) -> Self;
}

impl<T> Merge for Option<T> {
    fn merge(self, fallback: Self) -> Self {
        self.or(fallback)
    }
}

impl<T> Merge for Vec<T> {
    fn merge(self, fallback: Self) -> Self {
        if self.is_empty() {
            fallback
        } else {
            self
        }
    }
}

macro_rules! merge_fields {
    ($ty:ty { $($field:ident),* $(,)? }) => {
        impl Merge for $ty {
            fn merge(self, fallback: Self) -> Self {
                Self { $($field: self.$field.merge(fallback.$field)),* }
            }
        }
    };
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct InputArgs {
    /// Hourly flows CSV.
    #[arg(long, value_name = "PATH")]
    pub flows: Option<PathBuf>,
    /// Price bars as ASSET=PATH; repeat per asset.
    #[arg(long = "bars", value_name = "ASSET=PATH")]
    pub bars: Vec<String>,
    /// Bar frequency, e.g. 5m or 1h [default: 5m].
    #[arg(long, value_name = "DURATION")]
    pub bar_freq: Option<String>,
    /// Option quotes CSV.
    #[arg(long, value_name = "PATH")]
    pub options: Option<PathBuf>,
}

merge_fields!(InputArgs {
    flows,
    bars,
    bar_freq,
    options
});

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct RegressArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub inputs: InputArgs,
    /// Horizons such as 1,2,3,4,6 or 1h,6h [default: 1,2,3,4,6].
    #[arg(long, value_delimiter = ',')]
    pub horizons: Vec<String>,
    /// Predictor>response pairs [default: USDT>ETH,ETH>ETH,USDT>BTC,BTC>BTC].
    #[arg(long, value_delimiter = ',')]
    pub pairs: Vec<String>,
    /// return, volatility [default: both].
    #[arg(long, value_delimiter = ',')]
    pub targets: Vec<String>,
    /// single, double [default: both].
    #[arg(long, value_delimiter = ',')]
    pub models: Vec<String>,
    /// Sub-bar spacing for realized volatility [default: 5m].
    #[arg(long, value_name = "DURATION")]
    pub sub_freq: Option<String>,
    /// Minimum aligned observations per cell [default: 30].
    #[arg(long)]
    pub min_obs: Option<usize>,
    /// Use Newey-West standard errors.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub newey_west: Option<bool>,
    /// Newey-West lag count [default: floor(4 (n/100)^(2/9))].
    #[arg(long)]
    pub nw_lags: Option<usize>,
    /// Also fit the daily and weekly grid.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub daily_weekly: Option<bool>,
    /// Output directory [default: out].
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

merge_fields!(RegressArgs {
    inputs,
    horizons,
    pairs,
    targets,
    models,
    sub_freq,
    min_obs,
    newey_west,
    nw_lags,
    daily_weekly,
    out,
});

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct EventsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub inputs: InputArgs,
    /// Asset whose net inflows are ranked [default: ETH].
    #[arg(long)]
    pub asset: Option<String>,
    /// Hits per year [default: 10].
    #[arg(long)]
    pub k: Option<usize>,
    /// Calendar years [default: every year in the data].
    #[arg(long, value_delimiter = ',')]
    pub years: Vec<i32>,
    /// inflow or outflow [default: inflow].
    #[arg(long)]
    pub direction: Option<String>,
    /// Window before each hit [default: 3d].
    #[arg(long, value_name = "DURATION")]
    pub pre: Option<String>,
    /// Window after each hit [default: 2d].
    #[arg(long, value_name = "DURATION")]
    pub post: Option<String>,
    /// Output directory [default: out].
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

merge_fields!(EventsArgs {
    inputs,
    asset,
    k,
    years,
    direction,
    pre,
    post,
    out,
});

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct BacktestArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub inputs: InputArgs,
    /// Asset whose net inflows select event hours [default: ETH].
    #[arg(long)]
    pub asset: Option<String>,
    /// Tail fractions in (0, 1] [default: 0.1].
    #[arg(long, value_delimiter = ',')]
    pub percentiles: Vec<f64>,
    /// top, bottom [default: both].
    #[arg(long, value_delimiter = ',')]
    pub legs: Vec<String>,
    /// sell_call, buy_call [default: sell_call].
    #[arg(long, value_delimiter = ',')]
    pub sides: Vec<String>,
    /// Holding period [default: 1h].
    #[arg(long, value_name = "DURATION")]
    pub holding: Option<String>,
    /// Quote matching tolerance [default: 30m].
    #[arg(long, value_name = "DURATION")]
    pub tolerance: Option<String>,
    /// Option fee as a fraction of index [default: 0.0003].
    #[arg(long)]
    pub premium_rate: Option<f64>,
    /// Hedge fee per unit delta as a fraction of index [default: 0.0005].
    #[arg(long)]
    pub hedge_rate: Option<f64>,
    /// Half bid-ask spread as a fraction of index [default: 0.0005].
    #[arg(long)]
    pub half_spread: Option<f64>,
    /// Slippage as a fraction of index [default: 0].
    #[arg(long)]
    pub slippage: Option<f64>,
    /// count or pnl-ratio [default: count].
    #[arg(long)]
    pub wtl: Option<String>,
    /// Output directory [default: out].
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

merge_fields!(BacktestArgs {
    inputs,
    asset,
    percentiles,
    legs,
    sides,
    holding,
    tolerance,
    premium_rate,
    hedge_rate,
    half_spread,
    slippage,
    wtl,
    out,
});

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct SynthArgs {
    /// simple, null, heatmap or backtest [default: simple].
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub hours: Option<usize>,
    /// Planting horizon in hours for the heatmap preset [default: 1].
    #[arg(long)]
    pub horizon: Option<i64>,
    /// Also write an option chain (always on for the backtest preset).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub with_options: Option<bool>,
    /// Output directory [default: out].
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Full parameter set for the simple preset; config file only.
    #[arg(skip)]
    pub simple: Option<flowcast_core::synth::SynthConfig>,
}

merge_fields!(SynthArgs {
    preset,
    seed,
    hours,
    horizon,
    with_options,
    out,
    simple,
});

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct ReportArgs {
    /// Directory holding heatmap.json, backtest.tsv and/or events.csv [default: out].
    #[arg(long, value_name = "DIR")]
    pub dir: Option<PathBuf>,
    /// Report path [default: <dir>/report.md].
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

merge_fields!(ReportArgs { dir, out });

/// Parsed config file.
#[derive(Debug, Default, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct ConfigFile {
    pub inputs: InputArgs,
    pub ingest_check: InputArgs,
    pub regress: RegressArgs,
    pub events: EventsArgs,
    pub backtest: BacktestArgs,
    pub synth: SynthArgs,
    pub report: ReportArgs,
}
