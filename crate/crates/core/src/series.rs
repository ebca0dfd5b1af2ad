//! Horizon series: bucketed net inflows, simple returns and realized volatility,
//! and the t / t+h alignment used by the predictive regressions.
//!
//! All series sample non-overlapping buckets anchored at multiples of the
//! horizon since the Unix epoch. A bucket is emitted only when every input it
//! touches is present; missing bars are never filled.

use std::collections::HashMap;

use chrono::TimeDelta;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{BarSeries, FlowRecord};
use crate::time::{floor_to, format_duration, is_aligned, ratio, Timestamp};
use crate::{Asset, USD_PER_MILLION};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeriesError {
    #[error("no flow records for {0}")]
    EmptyInput(Asset),
    #[error("bar frequency {frequency} does not divide {span}")]
    FrequencyMismatch { frequency: String, span: String },
    #[error("window {horizon} holds {count} sub-bars of {sub_frequency}; at least 2 required")]
    InsufficientSubBars {
        horizon: String,
        sub_frequency: String,
        count: i64,
    },
    #[error("series horizon {found} differs from requested {expected}")]
    HorizonMismatch { expected: String, found: String },
    #[error("no predictor/response pairs survive alignment")]
    EmptyAlignment,
}

pub type Result<T> = std::result::Result<T, SeriesError>;

/// Common view over the three horizon series.
pub trait HorizonSeries {
    fn horizon(&self) -> TimeDelta;
    fn points(&self) -> &[(Timestamp, f64)];
}

macro_rules! horizon_series {
    ($name:ident) => {
        impl HorizonSeries for $name {
            fn horizon(&self) -> TimeDelta {
                self.horizon
            }
            fn points(&self) -> &[(Timestamp, f64)] {
                &self.points
            }
        }
    };
}

/// Net inflow per bucket, in US$ millions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetInflowSeries {
    pub asset: Asset,
    pub horizon: TimeDelta,
    pub points: Vec<(Timestamp, f64)>,
}

/// Simple return `close(t+h)/close(t) - 1` per bucket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    pub horizon: TimeDelta,
    pub points: Vec<(Timestamp, f64)>,
}

/// Sample standard deviation of sub-bar simple returns per bucket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolSeries {
    pub horizon: TimeDelta,
    pub sub_frequency: TimeDelta,
    pub points: Vec<(Timestamp, f64)>,
}

horizon_series!(NetInflowSeries);
horizon_series!(ReturnSeries);
horizon_series!(VolSeries);

/// Net inflow over each complete horizon bucket for `asset`.
///
/// Flows are hourly observations; a bucket needs all `h / 1h` hours present.
pub fn net_inflows(
    flows: &[FlowRecord],
    asset: Asset,
    horizon: TimeDelta,
) -> Result<NetInflowSeries> {
    let hours_per_bucket = ratio(horizon, TimeDelta::hours(1))
        .filter(|&n| n > 0)
        .ok_or_else(|| SeriesError::FrequencyMismatch {
            frequency: "1h".into(),
            span: format_duration(horizon),
        })?;
    let mut mine: Vec<&FlowRecord> = flows.iter().filter(|r| r.asset == asset).collect();
    if mine.is_empty() {
        return Err(SeriesError::EmptyInput(asset));
    }
    mine.sort_by_key(|r| r.timestamp);

    let mut points = Vec::new();
    let mut i = 0;
    while i < mine.len() {
        let start = floor_to(mine[i].timestamp, horizon);
        let end = start + horizon;
        let (mut inflow, mut outflow, mut count) = (0.0, 0.0, 0i64);
        while i < mine.len() && mine[i].timestamp < end {
            inflow += mine[i].inflow_usd;
            outflow += mine[i].outflow_usd;
            count += 1;
            i += 1;
        }
        if count == hours_per_bucket {
            points.push((start, (inflow - outflow) / USD_PER_MILLION));
        }
    }
    Ok(NetInflowSeries {
        asset,
        horizon,
        points,
    })
}

fn bars_per(span: TimeDelta, bars: &BarSeries) -> Result<usize> {
    ratio(span, bars.frequency)
        .filter(|&n| n > 0)
        .map(|n| n as usize)
        .ok_or_else(|| SeriesError::FrequencyMismatch {
            frequency: format_duration(bars.frequency),
            span: format_duration(span),
        })
}

/// Visits every bucket start `t` whose bars at `t, t+f, …, t+h` are all present,
/// passing the index of the bar at `t`.
fn complete_windows(bars: &BarSeries, horizon: TimeDelta, span: usize, mut f: impl FnMut(usize)) {
    let b = &bars.bars;
    for i in 0..b.len() {
        let t = b[i].timestamp;
        if !is_aligned(t, horizon) {
            continue;
        }
        // Timestamps are unique and on the frequency grid, so matching the
        // endpoint proves there is no gap in between.
        if i + span < b.len() && b[i + span].timestamp == t + horizon {
            f(i);
        }
    }
}

/// Non-overlapping simple returns at `horizon`.
pub fn returns(bars: &BarSeries, horizon: TimeDelta) -> Result<ReturnSeries> {
    let span = bars_per(horizon, bars)?;
    let mut points = Vec::new();
    complete_windows(bars, horizon, span, |i| {
        let b = &bars.bars;
        points.push((b[i].timestamp, b[i + span].close / b[i].close - 1.0));
    });
    Ok(ReturnSeries { horizon, points })
}

/// Realized volatility per horizon bucket: the sample (n-1) standard deviation
/// of the `h / sub_frequency` close-to-close simple returns in the window.
pub fn realized_vol(
    bars: &BarSeries,
    horizon: TimeDelta,
    sub_frequency: TimeDelta,
) -> Result<VolSeries> {
    let subs = ratio(horizon, sub_frequency).ok_or_else(|| SeriesError::FrequencyMismatch {
        frequency: format_duration(sub_frequency),
        span: format_duration(horizon),
    })?;
    if subs < 2 {
        return Err(SeriesError::InsufficientSubBars {
            horizon: format_duration(horizon),
            sub_frequency: format_duration(sub_frequency),
            count: subs,
        });
    }
    let step = bars_per(sub_frequency, bars)?;
    let span = bars_per(horizon, bars)?;
    let mut points = Vec::new();
    complete_windows(bars, horizon, span, |i| {
        let b = &bars.bars;
        // Welford accumulation.
        let (mut n, mut mean, mut m2) = (0.0f64, 0.0f64, 0.0f64);
        for j in 1..=subs as usize {
            let r = b[i + j * step].close / b[i + (j - 1) * step].close - 1.0;
            n += 1.0;
            let d = r - mean;
            mean += d / n;
            m2 += d * (r - mean);
        }
        points.push((b[i].timestamp, (m2 / (n - 1.0)).max(0.0).sqrt()));
    });
    Ok(VolSeries {
        horizon,
        sub_frequency,
        points,
    })
}

/// One regression row: predictor and optional control at `t`, response at `t + h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignedRow {
    pub t: Timestamp,
    pub predictor: f64,
    pub control: Option<f64>,
    pub response: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedSample {
    pub horizon: TimeDelta,
    pub rows: Vec<AlignedRow>,
}

impl AlignedSample {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn has_control(&self) -> bool {
        self.rows.first().is_some_and(|r| r.control.is_some())
    }

    /// Builds a sample directly from columns, with consecutive synthetic timestamps.
    pub fn from_columns(predictor: &[f64], control: Option<&[f64]>, response: &[f64]) -> Self {
        let horizon = TimeDelta::hours(1);
        let origin = Timestamp::UNIX_EPOCH;
        let rows = predictor
            .iter()
            .zip(response)
            .enumerate()
            .map(|(i, (&p, &y))| AlignedRow {
                t: origin + horizon * i as i32,
                predictor: p,
                control: control.map(|c| c[i]),
                response: y,
            })
            .collect();
        Self { horizon, rows }
    }
}

fn check_horizon(s: &dyn HorizonSeries, horizon: TimeDelta) -> Result<()> {
    if s.horizon() != horizon {
        return Err(SeriesError::HorizonMismatch {
            expected: format_duration(horizon),
            found: format_duration(s.horizon()),
        });
    }
    Ok(())
}

/// Pairs `predictor(t)` (and `control(t)` when given) with `response(t + h)`.
pub fn align(
    predictor: &NetInflowSeries,
    response: &dyn HorizonSeries,
    control: Option<&dyn HorizonSeries>,
    horizon: TimeDelta,
) -> Result<AlignedSample> {
    check_horizon(predictor, horizon)?;
    check_horizon(response, horizon)?;
    if let Some(c) = control {
        check_horizon(c, horizon)?;
    }
    let resp: HashMap<Timestamp, f64> = response.points().iter().copied().collect();
    let ctrl: Option<HashMap<Timestamp, f64>> =
        control.map(|c| c.points().iter().copied().collect());

    let mut rows = Vec::new();
    for &(t, x) in &predictor.points {
        let Some(&y) = resp.get(&(t + horizon)) else {
            continue;
        };
        let c = match &ctrl {
            Some(m) => match m.get(&t) {
                Some(&v) => Some(v),
                None => continue,
            },
            None => None,
        };
        rows.push(AlignedRow {
            t,
            predictor: x,
            control: c,
            response: y,
        });
    }
    if rows.is_empty() {
        return Err(SeriesError::EmptyAlignment);
    }
    Ok(AlignedSample { horizon, rows })
}
