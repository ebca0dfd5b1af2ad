//! Extreme net-inflow hours per calendar year, and the price/flow windows around them.

use std::collections::{BTreeMap, HashMap};
use std::io::{self, Write};

use chrono::{Datelike, TimeDelta};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::BarSeries;
use crate::numfmt::fmt17;
use crate::series::NetInflowSeries;
use crate::time::{format_utc, Timestamp};
use crate::Asset;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EventsError {
    #[error("k must be at least 1")]
    InvalidK,
    #[error("no observations in year {0}")]
    EmptyYear(i32),
    #[error("data does not cover the window: missing {track} at {at}")]
    InsufficientCoverage { track: &'static str, at: String },
}

pub type Result<T> = std::result::Result<T, EventsError>;

/// Which tail to rank. `Outflow` ranks the most negative net inflows first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    #[default]
    Inflow,
    Outflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventHit {
    pub asset: Asset,
    pub timestamp: Timestamp,
    pub net_inflow_musd: f64,
    pub year: i32,
    pub rank_in_year: usize,
}

/// Percentile implied by keeping the top `k` of `hours` observations.
pub fn threshold_percentile(k: usize, hours: usize) -> f64 {
    1.0 - k as f64 / hours as f64
}

/// The `k` most extreme hours of each requested UTC calendar year.
///
/// Ties go to the earlier timestamp. Output is ordered by year, then rank.
pub fn detect_extremes(
    series: &NetInflowSeries,
    k: usize,
    years: &[i32],
    direction: Direction,
) -> Result<Vec<EventHit>> {
    if k == 0 {
        return Err(EventsError::InvalidK);
    }
    let mut by_year: BTreeMap<i32, Vec<(Timestamp, f64)>> = BTreeMap::new();
    for &(t, v) in &series.points {
        by_year.entry(t.year()).or_default().push((t, v));
    }
    let mut years = years.to_vec();
    years.sort_unstable();
    years.dedup();

    let mut hits = Vec::new();
    for year in years {
        let Some(points) = by_year.get_mut(&year) else {
            return Err(EventsError::EmptyYear(year));
        };
        let key = |v: f64| match direction {
            Direction::Inflow => v,
            Direction::Outflow => -v,
        };
        points.sort_by(|a, b| key(b.1).total_cmp(&key(a.1)).then(a.0.cmp(&b.0)));
        hits.extend(
            points
                .iter()
                .take(k)
                .enumerate()
                .map(|(i, &(t, v))| EventHit {
                    asset: series.asset,
                    timestamp: t,
                    net_inflow_musd: v,
                    year,
                    rank_in_year: i + 1,
                }),
        );
    }
    Ok(hits)
}

/// Hourly flow and price tracks spanning `[event - pre, event + post]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseWindow {
    pub event: EventHit,
    pub pre: TimeDelta,
    pub post: TimeDelta,
    pub flow_track: Vec<(Timestamp, f64)>,
    pub price_track: Vec<(Timestamp, f64)>,
}

pub fn extract_window(
    event: &EventHit,
    flows: &NetInflowSeries,
    bars: &BarSeries,
    pre: TimeDelta,
    post: TimeDelta,
) -> Result<CaseWindow> {
    let flow: HashMap<Timestamp, f64> = flows.points.iter().copied().collect();
    let start = event.timestamp - pre;
    let end = event.timestamp + post;
    let mut flow_track = Vec::new();
    let mut price_track = Vec::new();
    let mut t = start;
    while t <= end {
        let f = flow
            .get(&t)
            .ok_or_else(|| EventsError::InsufficientCoverage {
                track: "flow",
                at: format_utc(t),
            })?;
        let i = bars
            .index_of(t)
            .ok_or_else(|| EventsError::InsufficientCoverage {
                track: "price",
                at: format_utc(t),
            })?;
        flow_track.push((t, *f));
        price_track.push((t, bars.bars[i].close));
        t += TimeDelta::hours(1);
    }
    Ok(CaseWindow {
        event: *event,
        pre,
        post,
        flow_track,
        price_track,
    })
}

pub fn write_events_csv<W: Write>(out: W, hits: &[EventHit]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["asset", "timestamp", "net_inflow_musd", "year", "rank"])?;
    for h in hits {
        w.write_record([
            h.asset.to_string(),
            format_utc(h.timestamp),
            fmt17(h.net_inflow_musd),
            h.year.to_string(),
            h.rank_in_year.to_string(),
        ])?;
    }
    w.flush()
}

/// Two-column `timestamp,<value_name>` track for external plotting.
pub fn write_track_csv<W: Write>(
    out: W,
    value_name: &str,
    track: &[(Timestamp, f64)],
) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["timestamp", value_name])?;
    for &(t, v) in track {
        w.write_record([format_utc(t), fmt17(v)])?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Bar;
    use crate::time::{hours, parse_utc};

    fn ts(s: &str) -> Timestamp {
        parse_utc(s).unwrap()
    }

    fn hourly(start: Timestamp, values: &[f64]) -> NetInflowSeries {
        NetInflowSeries {
            asset: Asset::Eth,
            horizon: hours(1),
            points: values
                .iter()
                .enumerate()
                .map(|(i, &v)| (start + hours(i as i64), v))
                .collect(),
        }
    }

    fn flat_bars(start: Timestamp, n: usize) -> BarSeries {
        let bars = (0..n)
            .map(|i| Bar {
                timestamp: start + hours(i as i64),
                open: 2000.0,
                high: 2000.0,
                low: 2000.0,
                close: 2000.0 + i as f64,
            })
            .collect();
        BarSeries::from_sorted(hours(1), bars)
    }

    #[test]
    fn percentile_for_ten_of_a_year() {
        let p = threshold_percentile(10, 8760);
        assert!((p - (1.0 - 10.0 / 8760.0)).abs() < 1e-15);
        assert_eq!(format!("{:.2}", p * 100.0), "99.89");
    }

    #[test]
    fn k_at_least_length_flags_everything() {
        let s = hourly(ts("2021-03-01T00:00:00Z"), &[1.0, 3.0, 2.0]);
        let hits = detect_extremes(&s, 5, &[2021], Direction::Inflow).unwrap();
        assert_eq!(hits.len(), 3);
        assert_eq!(
            hits.iter().map(|h| h.net_inflow_musd).collect::<Vec<_>>(),
            vec![3.0, 2.0, 1.0]
        );
        assert_eq!(
            hits.iter().map(|h| h.rank_in_year).collect::<Vec<_>>(),
            vec![1, 2, 3]
        );
    }

    #[test]
    fn ties_prefer_earlier_and_outflow_direction() {
        let t0 = ts("2021-03-01T00:00:00Z");
        let s = hourly(t0, &[5.0, -7.0, 5.0, 1.0]);
        let hits = detect_extremes(&s, 1, &[2021], Direction::Inflow).unwrap();
        assert_eq!(hits[0].timestamp, t0);
        let out = detect_extremes(&s, 1, &[2021], Direction::Outflow).unwrap();
        assert_eq!(out[0].net_inflow_musd, -7.0);
    }

    #[test]
    fn years_split_and_empty_year() {
        let s = hourly(ts("2021-12-31T22:00:00Z"), &[1.0, 2.0, 9.0, 0.5]);
        let hits = detect_extremes(&s, 1, &[2022, 2021], Direction::Inflow).unwrap();
        assert_eq!(hits.len(), 2);
        assert_eq!((hits[0].year, hits[0].net_inflow_musd), (2021, 2.0));
        assert_eq!((hits[1].year, hits[1].net_inflow_musd), (2022, 9.0));
        assert_eq!(
            detect_extremes(&s, 1, &[2020], Direction::Inflow),
            Err(EventsError::EmptyYear(2020))
        );
        assert_eq!(
            detect_extremes(&s, 0, &[2021], Direction::Inflow),
            Err(EventsError::InvalidK)
        );
    }

    #[test]
    fn window_around_may_twelfth() {
        let start = ts("2022-05-08T00:00:00Z");
        let n = 24 * 8;
        let s = hourly(start, &vec![1.0; n]);
        let b = flat_bars(start, n);
        let ev = EventHit {
            asset: Asset::Eth,
            timestamp: ts("2022-05-12T12:00:00Z"),
            net_inflow_musd: 1.0,
            year: 2022,
            rank_in_year: 1,
        };
        let w = extract_window(&ev, &s, &b, TimeDelta::days(3), TimeDelta::days(2)).unwrap();
        assert_eq!(w.flow_track.first().unwrap().0, ts("2022-05-09T12:00:00Z"));
        assert_eq!(w.flow_track.last().unwrap().0, ts("2022-05-14T12:00:00Z"));
        assert_eq!(w.flow_track.len(), 5 * 24 + 1);
        assert_eq!(w.price_track.len(), w.flow_track.len());

        let point = extract_window(&ev, &s, &b, TimeDelta::zero(), TimeDelta::zero()).unwrap();
        assert_eq!(point.flow_track.len(), 1);
        assert_eq!(point.price_track.len(), 1);

        let early = EventHit {
            timestamp: start,
            ..ev
        };
        assert!(matches!(
            extract_window(&early, &s, &b, TimeDelta::days(1), TimeDelta::zero()),
            Err(EventsError::InsufficientCoverage { .. })
        ));
    }
}
