//! Percentile-triggered option strategy backtests.

use std::collections::HashMap;
use std::io::{self, Write};

use chrono::TimeDelta;
use serde::{Deserialize, Serialize};

use super::stats::{bucket_stats, BucketFilter, BucketStats, WtlMode};
use super::trade::{trade_with_costs, CostParams, Side, TradeOutcome};
use super::OptionsError;
use crate::ingest::OptionQuote;
use crate::numfmt::{fmt17, fmt17_opt};
use crate::series::NetInflowSeries;
use crate::time::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Leg {
    Top,
    Bottom,
}

impl Leg {
    pub fn as_str(self) -> &'static str {
        match self {
            Leg::Top => "top",
            Leg::Bottom => "bottom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PercentileLeg {
    pub leg: Leg,
    pub pct: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BucketKey {
    pub leg: PercentileLeg,
    pub filter: BucketFilter,
}

impl BucketKey {
    pub fn label(&self, side: Side) -> String {
        format!(
            "{} {}% {} | {}",
            self.leg.leg.as_str(),
            (self.leg.pct * 10_000.0).round() / 100.0,
            side.as_str(),
            self.filter.label()
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BacktestOptions {
    /// Time between entry and exit quotes.
    pub holding: TimeDelta,
    /// Maximum lateness of a matched quote past its target time.
    pub tolerance: TimeDelta,
    pub wtl_mode: WtlMode,
}

impl Default for BacktestOptions {
    fn default() -> Self {
        Self {
            holding: TimeDelta::hours(1),
            tolerance: TimeDelta::minutes(30),
            wtl_mode: WtlMode::Count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub leg: PercentileLeg,
    pub side: Side,
    pub events_selected: usize,
    /// Events with no entry quote inside the tolerance.
    pub events_unmatched: usize,
    /// Entry instruments without an exit quote, or with zero entry price.
    pub instruments_skipped: usize,
    pub trades: Vec<TradeOutcome>,
    pub rows: Vec<(BucketKey, BucketStats)>,
}

/// Hours in the requested tail of the net-inflow distribution.
///
/// Takes `round(pct * n)` points (at least one when `pct > 0`), ranking ties
/// by earlier timestamp. Returned in chronological order.
pub fn select_percentile(series: &NetInflowSeries, pct: f64, leg: Leg) -> Vec<Timestamp> {
    let n = series.points.len();
    if n == 0 || pct <= 0.0 {
        return Vec::new();
    }
    let count = ((pct * n as f64).round() as usize).clamp(1, n);
    let mut pts = series.points.clone();
    pts.sort_by(|a, b| {
        let ord = match leg {
            Leg::Top => b.1.total_cmp(&a.1),
            Leg::Bottom => a.1.total_cmp(&b.1),
        };
        ord.then(a.0.cmp(&b.0))
    });
    let mut out: Vec<Timestamp> = pts[..count].iter().map(|p| p.0).collect();
    out.sort();
    out
}

type InstrumentKey = (u64, Timestamp);

fn key(q: &OptionQuote) -> InstrumentKey {
    (q.strike.to_bits(), q.expiry)
}

/// Quote lookups by time and by instrument.
struct QuoteBook<'a> {
    quotes: Vec<&'a OptionQuote>,
    by_instrument: HashMap<InstrumentKey, Vec<&'a OptionQuote>>,
}

impl<'a> QuoteBook<'a> {
    fn new(quotes: &'a [OptionQuote]) -> Self {
        let mut sorted: Vec<&OptionQuote> = quotes.iter().collect();
        sorted.sort_by(|a, b| {
            (a.quote_time, a.expiry)
                .cmp(&(b.quote_time, b.expiry))
                .then(a.strike.total_cmp(&b.strike))
        });
        let mut by_instrument: HashMap<InstrumentKey, Vec<&OptionQuote>> = HashMap::new();
        for q in &sorted {
            by_instrument.entry(key(q)).or_default().push(q);
        }
        Self {
            quotes: sorted,
            by_instrument,
        }
    }

    /// All quotes at the first quote time in `[t, t + tol]`.
    fn snapshot_at_or_after(&self, t: Timestamp, tol: TimeDelta) -> &[&'a OptionQuote] {
        let i = self.quotes.partition_point(|q| q.quote_time < t);
        let Some(first) = self.quotes.get(i) else {
            return &[];
        };
        if first.quote_time - t > tol {
            return &[];
        }
        let j = i + self.quotes[i..].partition_point(|q| q.quote_time == first.quote_time);
        &self.quotes[i..j]
    }

    fn instrument_at_or_after(
        &self,
        q: &OptionQuote,
        t: Timestamp,
        tol: TimeDelta,
    ) -> Option<&'a OptionQuote> {
        let series = self.by_instrument.get(&key(q))?;
        let i = series.partition_point(|x| x.quote_time < t);
        series.get(i).copied().filter(|x| x.quote_time - t <= tol)
    }
}

/// Trades every instrument quoted at each selected hour and aggregates the
/// outcomes by bucket.
///
/// Entry is the first quote snapshot at or after the event hour (within the
/// tolerance); each instrument exits at its first quote at or after
/// `entry + holding`. The hedge size is the entry quote's delta.
#[allow(clippy::too_many_arguments)]
pub fn percentile_backtest(
    net_inflows: &NetInflowSeries,
    quotes: &[OptionQuote],
    pct: f64,
    leg: Leg,
    side: Side,
    costs: &CostParams,
    buckets: &[BucketFilter],
    opts: &BacktestOptions,
) -> Result<BacktestReport, OptionsError> {
    if !(pct > 0.0 && pct <= 1.0) {
        return Err(OptionsError::InvalidPercentile(pct));
    }
    if !costs.is_valid() {
        return Err(OptionsError::InvalidCosts);
    }
    if quotes.is_empty() {
        return Err(OptionsError::NoMatchingQuotes);
    }
    let book = QuoteBook::new(quotes);
    let events = select_percentile(net_inflows, pct, leg);

    let mut trades = Vec::new();
    let (mut unmatched, mut skipped) = (0, 0);
    for &t in &events {
        let snapshot = book.snapshot_at_or_after(t, opts.tolerance);
        if snapshot.is_empty() {
            unmatched += 1;
            continue;
        }
        for entry in snapshot {
            let target = entry.quote_time + opts.holding;
            let Some(exit) = book.instrument_at_or_after(entry, target, opts.tolerance) else {
                skipped += 1;
                continue;
            };
            match trade_with_costs(entry, exit, side, entry.delta, costs) {
                Ok(tr) => trades.push(tr),
                Err(OptionsError::ZeroEntryPrice) => skipped += 1,
                Err(e) => return Err(e),
            }
        }
    }
    if trades.is_empty() {
        return Err(OptionsError::NoMatchingQuotes);
    }
    let pleg = PercentileLeg { leg, pct };
    let rows = buckets
        .iter()
        .map(|f| {
            (
                BucketKey {
                    leg: pleg,
                    filter: *f,
                },
                bucket_stats(&trades, f, opts.wtl_mode),
            )
        })
        .collect();
    Ok(BacktestReport {
        leg: pleg,
        side,
        events_selected: events.len(),
        events_unmatched: unmatched,
        instruments_skipped: skipped,
        trades,
        rows,
    })
}

pub const REPORT_HEADER: [&str; 6] = [
    "bucket",
    "win_rate",
    "total_trades",
    "wtl",
    "r_avg_net",
    "r_total_net",
];

/// Tab-separated profitability table; missing statistics print as `N/A`.
pub fn write_backtest_tsv<W: Write>(mut out: W, reports: &[BacktestReport]) -> io::Result<()> {
    writeln!(out, "{}", REPORT_HEADER.join("\t"))?;
    for r in reports {
        for (k, s) in &r.rows {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                k.label(r.side),
                fmt17_opt(s.win_rate),
                s.total_trades,
                fmt17_opt(s.wtl),
                fmt17_opt(s.r_avg_net),
                fmt17(s.r_total_net)
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::{hours, minutes, parse_utc};
    use crate::Asset;

    fn ts(s: &str) -> Timestamp {
        parse_utc(s).unwrap()
    }

    fn series(values: &[f64]) -> NetInflowSeries {
        let t0 = ts("2022-01-01T00:00:00Z");
        NetInflowSeries {
            asset: Asset::Eth,
            horizon: hours(1),
            points: values
                .iter()
                .enumerate()
                .map(|(i, &v)| (t0 + hours(i as i64), v))
                .collect(),
        }
    }

    fn chain(n_hours: i64) -> Vec<OptionQuote> {
        let t0 = ts("2022-01-01T00:00:00Z");
        let mut out = Vec::new();
        for h in 0..n_hours {
            for (j, strike) in [1900.0, 2000.0].into_iter().enumerate() {
                out.push(OptionQuote {
                    quote_time: t0 + hours(h) + minutes(3),
                    strike,
                    expiry: ts("2022-01-09T08:00:00Z"),
                    option_price: 0.05 - 0.001 * h as f64 - 0.01 * j as f64,
                    index_price: 2000.0,
                    implied_vol: 0.8,
                    delta: 0.5,
                });
            }
        }
        out
    }

    #[test]
    fn selection_counts_and_full_sample() {
        let s = series(&[5.0, 1.0, 3.0, 2.0, 4.0, 0.0, -1.0, 7.0, 6.0, 8.0]);
        assert_eq!(select_percentile(&s, 0.1, Leg::Top), vec![s.points[9].0]);
        assert_eq!(
            select_percentile(&s, 0.2, Leg::Bottom),
            vec![s.points[5].0, s.points[6].0]
        );
        let all_top = select_percentile(&s, 1.0, Leg::Top);
        assert_eq!(all_top.len(), 10);
        assert_eq!(all_top, select_percentile(&s, 1.0, Leg::Bottom));
    }

    #[test]
    fn full_percentile_legs_match() {
        let s = series(&[1.0, -2.0, 3.0, 0.5, -0.5, 2.0]);
        let q = chain(8);
        let rows = BucketFilter::standard_rows();
        let opts = BacktestOptions::default();
        let top = percentile_backtest(
            &s,
            &q,
            1.0,
            Leg::Top,
            Side::SellCall,
            &CostParams::default(),
            &rows,
            &opts,
        )
        .unwrap();
        let bot = percentile_backtest(
            &s,
            &q,
            1.0,
            Leg::Bottom,
            Side::SellCall,
            &CostParams::default(),
            &rows,
            &opts,
        )
        .unwrap();
        assert_eq!(top.trades, bot.trades);
        assert_eq!(top.trades.len(), 12);
        for ((_, a), (_, b)) in top.rows.iter().zip(&bot.rows) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn unmatched_events_are_counted() {
        let s = series(&[1.0, 2.0, 3.0]);
        // Quotes only in the first hour; later events have no exit or entry.
        let q = chain(2);
        let opts = BacktestOptions::default();
        let r = percentile_backtest(
            &s,
            &q,
            1.0,
            Leg::Top,
            Side::SellCall,
            &CostParams::ZERO,
            &[BucketFilter::default()],
            &opts,
        )
        .unwrap();
        assert_eq!(r.events_selected, 3);
        assert_eq!(r.trades.len(), 2);
        assert_eq!(r.instruments_skipped, 2);
        assert_eq!(r.events_unmatched, 1);
    }

    #[test]
    fn empty_quotes() {
        let s = series(&[1.0, 2.0]);
        let opts = BacktestOptions::default();
        assert_eq!(
            percentile_backtest(
                &s,
                &[],
                0.1,
                Leg::Top,
                Side::SellCall,
                &CostParams::default(),
                &[],
                &opts
            ),
            Err(OptionsError::NoMatchingQuotes)
        );
    }

    #[test]
    fn tsv_renders_na() {
        let s = series(&[1.0, 2.0, 3.0]);
        let q = chain(5);
        let only_iv3 = BucketFilter {
            iv: Some(super::super::IvFilter::AtLeast(3.0)),
            otm: None,
        };
        let r = percentile_backtest(
            &s,
            &q,
            1.0,
            Leg::Top,
            Side::SellCall,
            &CostParams::default(),
            &[only_iv3],
            &BacktestOptions::default(),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_backtest_tsv(&mut buf, &[r]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("bucket\twin_rate\ttotal_trades\twtl\tr_avg_net\tr_total_net\n"));
        assert!(
            text.contains("top 100% sell_call | IV>=3\tN/A\t0\tN/A\tN/A\t0.0000000000000000e0"),
            "{text}"
        );
    }
}
