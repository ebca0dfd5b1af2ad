use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::PathBuf;

use flowcast_core::ingest::OptionQuote;
use flowcast_core::numfmt::fmt17;
use flowcast_core::options::{
    percentile_backtest, write_backtest_tsv, BacktestOptions, BacktestReport, BucketFilter,
    CostParams, Leg, Side, WtlMode,
};
use flowcast_core::series::net_inflows;
use flowcast_core::time::{format_utc, hours, minutes};
use flowcast_core::Asset;

use super::{
    asset, create_dir, duration, flows_path, load_flows, load_quotes, options_path, write_with,
    DEFAULT_OUT,
};
use crate::args::BacktestArgs;
use crate::error::{CliError, Result};

fn leg(s: &str) -> Result<Leg> {
    match s.trim().to_ascii_lowercase().as_str() {
        "top" => Ok(Leg::Top),
        "bottom" => Ok(Leg::Bottom),
        other => Err(CliError::invalid(format!("unknown leg {other:?}"))),
    }
}

fn side(s: &str) -> Result<Side> {
    match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
        "sell_call" | "sell" => Ok(Side::SellCall),
        "buy_call" | "buy" => Ok(Side::BuyCall),
        other => Err(CliError::invalid(format!("unknown side {other:?}"))),
    }
}

fn wtl(s: &str) -> Result<WtlMode> {
    match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
        "count" => Ok(WtlMode::Count),
        "pnl-ratio" => Ok(WtlMode::PnlRatio),
        other => Err(CliError::invalid(format!("unknown wtl mode {other:?}"))),
    }
}

fn costs(args: &BacktestArgs) -> Result<CostParams> {
    let d = CostParams::default();
    let c = CostParams {
        premium_rate: args.premium_rate.unwrap_or(d.premium_rate),
        hedge_rate: args.hedge_rate.unwrap_or(d.hedge_rate),
        half_spread: args.half_spread.unwrap_or(d.half_spread),
        slippage: args.slippage.unwrap_or(d.slippage),
    };
    if c.is_valid() {
        Ok(c)
    } else {
        Err(CliError::invalid(
            "cost parameters must be finite and non-negative",
        ))
    }
}

const TRADES_HEADER: [&str; 14] = [
    "bucket_leg",
    "side",
    "entry_time",
    "exit_time",
    "expiry",
    "strike",
    "index_entry",
    "index_exit",
    "implied_vol",
    "delta",
    "r_option",
    "r_portfolio",
    "r_portfolio_net",
    "win",
];

fn write_trades<W: Write>(mut out: W, reports: &[BacktestReport]) -> io::Result<()> {
    writeln!(out, "{}", TRADES_HEADER.join(","))?;
    for r in reports {
        let leg = format!(
            "{} {}%",
            r.leg.leg.as_str(),
            (r.leg.pct * 10_000.0).round() / 100.0
        );
        for t in &r.trades {
            let q: &OptionQuote = &t.entry;
            writeln!(
                out,
                "{leg},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                t.side.as_str(),
                format_utc(q.quote_time),
                format_utc(t.exit.quote_time),
                format_utc(q.expiry),
                fmt17(q.strike),
                fmt17(q.index_price),
                fmt17(t.exit.index_price),
                fmt17(q.implied_vol),
                fmt17(t.delta_hedge),
                fmt17(t.r_option),
                fmt17(t.r_portfolio),
                fmt17(t.r_portfolio_net),
                t.win
            )?;
        }
    }
    Ok(())
}

/// Runs every (percentile, leg, side) combination, writing `backtest.tsv`
/// and `trades.csv`. A combination with no matched trades is skipped.
pub fn run(args: &BacktestArgs) -> Result<String> {
    let asset_: Asset = args.asset.as_deref().map_or(Ok(Asset::Eth), asset)?;
    let pcts = if args.percentiles.is_empty() {
        vec![0.1]
    } else {
        args.percentiles.clone()
    };
    if let Some(p) = pcts.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
        return Err(CliError::invalid(format!("percentile {p} outside (0, 1]")));
    }
    let legs = if args.legs.is_empty() {
        vec![Leg::Top, Leg::Bottom]
    } else {
        args.legs.iter().map(|s| leg(s)).collect::<Result<_>>()?
    };
    let sides = if args.sides.is_empty() {
        vec![Side::SellCall]
    } else {
        args.sides.iter().map(|s| side(s)).collect::<Result<_>>()?
    };
    let opts = BacktestOptions {
        holding: args
            .holding
            .as_deref()
            .map_or(Ok(hours(1)), |s| duration(s, "holding"))?,
        tolerance: args
            .tolerance
            .as_deref()
            .map_or(Ok(minutes(30)), |s| duration(s, "tolerance"))?,
        wtl_mode: args.wtl.as_deref().map_or(Ok(WtlMode::Count), wtl)?,
    };
    let costs = costs(args)?;

    let flows = load_flows(flows_path(&args.inputs)?)?;
    let quotes = load_quotes(options_path(&args.inputs)?)?;
    let series = net_inflows(&flows, asset_, hours(1))?;
    let buckets = BucketFilter::standard_rows();

    let mut reports = Vec::new();
    let mut summary = String::new();
    for &pct in &pcts {
        for &l in &legs {
            for &s in &sides {
                match percentile_backtest(&series, &quotes, pct, l, s, &costs, &buckets, &opts) {
                    Ok(r) => {
                        let all = &r.rows[0].1;
                        let _ = writeln!(
                            summary,
                            "{}\tevents={}\tunmatched={}\ttrades={}\twin_rate={}",
                            r.rows[0].0.label(s),
                            r.events_selected,
                            r.events_unmatched,
                            all.total_trades,
                            flowcast_core::numfmt::fmt17_opt(all.win_rate)
                        );
                        reports.push(r);
                    }
                    Err(e) => log::warn!("{} {pct} {}: {e}", l.as_str(), s.as_str()),
                }
            }
        }
    }
    if reports.is_empty() {
        return Err(CliError::Estimation(
            "no backtest leg produced any trades".into(),
        ));
    }
    let out: PathBuf = args.out.clone().unwrap_or_else(|| DEFAULT_OUT.into());
    create_dir(&out)?;
    write_with(&out.join("backtest.tsv"), |b| {
        write_backtest_tsv(b, &reports)
    })?;
    write_with(&out.join("trades.csv"), |b| write_trades(b, &reports))?;
    Ok(summary)
}
