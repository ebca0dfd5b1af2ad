//! CSV ingestion for exchange flows, OHLC bars and call-option quotes.
//!
//! Each reader validates the documented header, rejects rows that break the
//! domain invariants (with the 1-based file line), and returns records in
//! canonical order. The matching writers emit the canonical form, so
//! `write(parse(f))` is byte-identical to `f` whenever `f` is canonical.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;

use chrono::TimeDelta;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numfmt::fmt17;
use crate::time::{format_utc, parse_utc, Timestamp};
use crate::Asset;

pub const FLOWS_HEADER: [&str; 4] = ["timestamp", "asset", "inflow_usd", "outflow_usd"];
pub const BARS_HEADER: [&str; 5] = ["timestamp", "open", "high", "low", "close"];
pub const OPTIONS_HEADER: [&str; 7] = [
    "quote_time",
    "strike",
    "expiry",
    "option_price",
    "index_price",
    "implied_vol",
    "delta",
];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("header mismatch: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("line {line}: negative flow {value}")]
    NegativeFlow { line: u64, value: f64 },
    #[error("line {line}: duplicate timestamp {timestamp}{}", asset.map(|a| format!(" for {a}")).unwrap_or_default())]
    DuplicateTimestamp {
        line: u64,
        asset: Option<Asset>,
        timestamp: String,
    },
    #[error("line {line}: non-positive price {value}")]
    NonPositivePrice { line: u64, value: f64 },
    #[error("line {line}: high/low do not bracket open and close")]
    InconsistentBar { line: u64 },
    #[error("line {line}: timestamp {timestamp} is off the {frequency} grid")]
    FrequencyMismatch {
        line: u64,
        timestamp: String,
        frequency: String,
    },
    #[error("line {line}: expiry {expiry} is not after quote time {quote_time}")]
    ExpiredAtQuote {
        line: u64,
        quote_time: String,
        expiry: String,
    },
    #[error("line {line}: call delta {delta} outside [0, 1]")]
    DeltaOutOfRange { line: u64, delta: f64 },
}

pub type Result<T> = std::result::Result<T, IngestError>;

/// One asset's exchange inflow and outflow over the hour starting at `timestamp`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub timestamp: Timestamp,
    pub asset: Asset,
    pub inflow_usd: f64,
    pub outflow_usd: f64,
}

impl FlowRecord {
    pub fn net_usd(&self) -> f64 {
        self.inflow_usd - self.outflow_usd
    }
}

/// OHLC bar; `timestamp` is the bar open.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub timestamp: Timestamp,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
}

/// Bars at one uniform frequency, plus the grid points that had no bar.
#[derive(Debug, Clone, PartialEq)]
pub struct BarSeries {
    pub frequency: TimeDelta,
    pub bars: Vec<Bar>,
    pub gaps: Vec<Timestamp>,
}

impl BarSeries {
    /// Builds a series from bars already validated and sorted, recomputing gaps.
    pub fn from_sorted(frequency: TimeDelta, bars: Vec<Bar>) -> Self {
        let gaps = find_gaps(&bars, frequency);
        Self {
            frequency,
            bars,
            gaps,
        }
    }

    /// Index of the bar opening at `t`, if present.
    pub fn index_of(&self, t: Timestamp) -> Option<usize> {
        self.bars.binary_search_by_key(&t, |b| b.timestamp).ok()
    }
}

/// A call-option quote. `option_price` is quoted in units of the underlying.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionQuote {
    pub quote_time: Timestamp,
    pub strike: f64,
    pub expiry: Timestamp,
    pub option_price: f64,
    pub index_price: f64,
    pub implied_vol: f64,
    pub delta: f64,
}

impl OptionQuote {
    /// Same contract: identical strike and expiry.
    pub fn same_instrument(&self, other: &OptionQuote) -> bool {
        self.strike == other.strike && self.expiry == other.expiry
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn reader<R: Read>(input: R, expected: &[&str]) -> Result<csv::Reader<R>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = rdr.headers().map_err(|e| IngestError::MalformedRow {
        line: 1,
        reason: e.to_string(),
    })?;
    if headers.iter().ne(expected.iter().copied()) {
        return Err(IngestError::Header {
            expected: expected.join(","),
            found: headers.iter().collect::<Vec<_>>().join(","),
        });
    }
    Ok(rdr)
}

struct Row {
    line: u64,
    rec: csv::StringRecord,
}

impl Row {
    fn malformed(&self, reason: impl Into<String>) -> IngestError {
        IngestError::MalformedRow {
            line: self.line,
            reason: reason.into(),
        }
    }

    fn field(&self, i: usize, name: &str) -> Result<&str> {
        self.rec
            .get(i)
            .ok_or_else(|| self.malformed(format!("missing field `{name}`")))
    }

    fn time(&self, i: usize, name: &str) -> Result<Timestamp> {
        let s = self.field(i, name)?;
        parse_utc(s).ok_or_else(|| {
            self.malformed(format!("`{name}` is not an ISO-8601 UTC instant: {s:?}"))
        })
    }

    fn num(&self, i: usize, name: &str) -> Result<f64> {
        let s = self.field(i, name)?;
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.malformed(format!("`{name}` is not a finite number: {s:?}"))),
        }
    }
}

fn rows<R: Read>(rdr: &mut csv::Reader<R>, width: usize) -> Result<Vec<Row>> {
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| IngestError::MalformedRow {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            reason: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let row = Row { line, rec };
        if row.rec.len() != width {
            return Err(row.malformed(format!("expected {width} fields, found {}", row.rec.len())));
        }
        out.push(row);
    }
    Ok(out)
}

pub fn parse_flows(path: impl AsRef<Path>) -> Result<Vec<FlowRecord>> {
    read_flows(open(path.as_ref())?)
}

pub fn read_flows<R: Read>(input: R) -> Result<Vec<FlowRecord>> {
    let mut rdr = reader(input, &FLOWS_HEADER)?;
    let mut recs = Vec::new();
    for row in rows(&mut rdr, FLOWS_HEADER.len())? {
        let timestamp = row.time(0, "timestamp")?;
        if !crate::time::is_aligned(timestamp, TimeDelta::hours(1)) {
            return Err(row.malformed("flow timestamp is not hour-aligned"));
        }
        let asset: Asset = row
            .field(1, "asset")?
            .parse()
            .map_err(|e: crate::UnknownAsset| row.malformed(e.to_string()))?;
        let inflow_usd = row.num(2, "inflow_usd")?;
        let outflow_usd = row.num(3, "outflow_usd")?;
        for v in [inflow_usd, outflow_usd] {
            if v < 0.0 {
                return Err(IngestError::NegativeFlow {
                    line: row.line,
                    value: v,
                });
            }
        }
        recs.push((
            row.line,
            FlowRecord {
                timestamp,
                asset,
                inflow_usd,
                outflow_usd,
            },
        ));
    }
    recs.sort_by_key(|(line, r)| (r.asset, r.timestamp, *line));
    for w in recs.windows(2) {
        let (a, b) = (&w[0].1, &w[1]);
        if a.asset == b.1.asset && a.timestamp == b.1.timestamp {
            return Err(IngestError::DuplicateTimestamp {
                line: b.0,
                asset: Some(a.asset),
                timestamp: format_utc(a.timestamp),
            });
        }
    }
    Ok(recs.into_iter().map(|(_, r)| r).collect())
}

pub fn write_flows<W: Write>(out: W, records: &[FlowRecord]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FLOWS_HEADER)?;
    for r in records {
        w.write_record([
            format_utc(r.timestamp),
            r.asset.to_string(),
            fmt17(r.inflow_usd),
            fmt17(r.outflow_usd),
        ])?;
    }
    w.flush()
}

pub fn parse_bars(path: impl AsRef<Path>, frequency: TimeDelta) -> Result<BarSeries> {
    read_bars(open(path.as_ref())?, frequency)
}

pub fn read_bars<R: Read>(input: R, frequency: TimeDelta) -> Result<BarSeries> {
    let mut rdr = reader(input, &BARS_HEADER)?;
    let mut bars = Vec::new();
    for row in rows(&mut rdr, BARS_HEADER.len())? {
        let timestamp = row.time(0, "timestamp")?;
        let mut px = [0.0; 4];
        for (i, name) in BARS_HEADER[1..].iter().enumerate() {
            px[i] = row.num(i + 1, name)?;
            if px[i] <= 0.0 {
                return Err(IngestError::NonPositivePrice {
                    line: row.line,
                    value: px[i],
                });
            }
        }
        let [open, high, low, close] = px;
        if low > open.min(close) || high < open.max(close) || low > high {
            return Err(IngestError::InconsistentBar { line: row.line });
        }
        bars.push((
            row.line,
            Bar {
                timestamp,
                open,
                high,
                low,
                close,
            },
        ));
    }
    bars.sort_by_key(|(line, b)| (b.timestamp, *line));
    if let Some((_, first)) = bars.first() {
        let step = frequency.num_seconds();
        let origin = first.timestamp.timestamp();
        for (line, b) in &bars {
            if step <= 0 || (b.timestamp.timestamp() - origin) % step != 0 {
                return Err(IngestError::FrequencyMismatch {
                    line: *line,
                    timestamp: format_utc(b.timestamp),
                    frequency: crate::time::format_duration(frequency),
                });
            }
        }
    }
    for w in bars.windows(2) {
        if w[0].1.timestamp == w[1].1.timestamp {
            return Err(IngestError::DuplicateTimestamp {
                line: w[1].0,
                asset: None,
                timestamp: format_utc(w[1].1.timestamp),
            });
        }
    }
    let bars = bars.into_iter().map(|(_, b)| b).collect();
    Ok(BarSeries::from_sorted(frequency, bars))
}

fn find_gaps(bars: &[Bar], frequency: TimeDelta) -> Vec<Timestamp> {
    let mut gaps = Vec::new();
    for w in bars.windows(2) {
        let mut t = w[0].timestamp + frequency;
        while t < w[1].timestamp {
            gaps.push(t);
            t += frequency;
        }
    }
    gaps
}

pub fn write_bars<W: Write>(out: W, bars: &[Bar]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(BARS_HEADER)?;
    for b in bars {
        w.write_record([
            format_utc(b.timestamp),
            fmt17(b.open),
            fmt17(b.high),
            fmt17(b.low),
            fmt17(b.close),
        ])?;
    }
    w.flush()
}

pub fn parse_option_quotes(path: impl AsRef<Path>) -> Result<Vec<OptionQuote>> {
    read_option_quotes(open(path.as_ref())?)
}

pub fn read_option_quotes<R: Read>(input: R) -> Result<Vec<OptionQuote>> {
    let mut rdr = reader(input, &OPTIONS_HEADER)?;
    let mut quotes = Vec::new();
    for row in rows(&mut rdr, OPTIONS_HEADER.len())? {
        let quote_time = row.time(0, "quote_time")?;
        let strike = row.num(1, "strike")?;
        let expiry = row.time(2, "expiry")?;
        let option_price = row.num(3, "option_price")?;
        let index_price = row.num(4, "index_price")?;
        let implied_vol = row.num(5, "implied_vol")?;
        let delta = row.num(6, "delta")?;
        for v in [strike, index_price] {
            if v <= 0.0 {
                return Err(IngestError::NonPositivePrice {
                    line: row.line,
                    value: v,
                });
            }
        }
        if option_price < 0.0 {
            return Err(row.malformed("option_price is negative"));
        }
        if implied_vol < 0.0 {
            return Err(row.malformed("implied_vol is negative"));
        }
        if expiry <= quote_time {
            return Err(IngestError::ExpiredAtQuote {
                line: row.line,
                quote_time: format_utc(quote_time),
                expiry: format_utc(expiry),
            });
        }
        if !(0.0..=1.0).contains(&delta) {
            return Err(IngestError::DeltaOutOfRange {
                line: row.line,
                delta,
            });
        }
        quotes.push(OptionQuote {
            quote_time,
            strike,
            expiry,
            option_price,
            index_price,
            implied_vol,
            delta,
        });
    }
    sort_quotes(&mut quotes);
    Ok(quotes)
}

/// Canonical quote order: quote time, then expiry, then strike.
pub fn sort_quotes(quotes: &mut [OptionQuote]) {
    quotes.sort_by(|a, b| {
        (a.quote_time, a.expiry)
            .cmp(&(b.quote_time, b.expiry))
            .then(a.strike.total_cmp(&b.strike))
    });
}

pub fn write_option_quotes<W: Write>(out: W, quotes: &[OptionQuote]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(OPTIONS_HEADER)?;
    for q in quotes {
        w.write_record([
            format_utc(q.quote_time),
            fmt17(q.strike),
            format_utc(q.expiry),
            fmt17(q.option_price),
            fmt17(q.index_price),
            fmt17(q.implied_vol),
            fmt17(q.delta),
        ])?;
    }
    w.flush()
}
