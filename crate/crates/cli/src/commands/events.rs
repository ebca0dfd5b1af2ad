use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use chrono::Datelike;
use flowcast_core::events::{
    detect_extremes, extract_window, threshold_percentile, write_events_csv, write_track_csv,
    Direction, EventsError,
};
use flowcast_core::numfmt::fmt17;
use flowcast_core::series::net_inflows;
use flowcast_core::time::{hours, Timestamp};
use flowcast_core::Asset;

use super::{
    asset, bar_frequency, bar_paths, create_dir, duration, flows_path, load_bars, load_flows,
    write_with, DEFAULT_OUT,
};
use crate::args::EventsArgs;
use crate::error::{CliError, Result};

fn direction(s: &str) -> Result<Direction> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inflow" => Ok(Direction::Inflow),
        "outflow" => Ok(Direction::Outflow),
        other => Err(CliError::invalid(format!("unknown direction {other:?}"))),
    }
}

fn stamp(t: Timestamp) -> String {
    t.format("%Y%m%dT%H%M").to_string()
}

/// Writes `events.csv` and, when bars for the asset are given, one flow and
/// one price track per hit under `windows/`. Returns the per-year thresholds.
pub fn run(args: &EventsArgs) -> Result<String> {
    let asset_: Asset = args.asset.as_deref().map_or(Ok(Asset::Eth), asset)?;
    let k = args.k.unwrap_or(10);
    let direction = args
        .direction
        .as_deref()
        .map_or(Ok(Direction::Inflow), direction)?;
    let pre = args
        .pre
        .as_deref()
        .map_or(Ok(hours(72)), |s| duration(s, "pre-window"))?;
    let post = args
        .post
        .as_deref()
        .map_or(Ok(hours(48)), |s| duration(s, "post-window"))?;

    let flows = load_flows(flows_path(&args.inputs)?)?;
    let series = net_inflows(&flows, asset_, hours(1))?;
    let mut per_year: BTreeMap<i32, usize> = BTreeMap::new();
    for (t, _) in &series.points {
        *per_year.entry(t.year()).or_default() += 1;
    }
    let years: Vec<i32> = if args.years.is_empty() {
        per_year.keys().copied().collect()
    } else {
        args.years.clone()
    };
    let hits = detect_extremes(&series, k, &years, direction)?;

    let out: PathBuf = args.out.clone().unwrap_or_else(|| DEFAULT_OUT.into());
    create_dir(&out)?;
    write_with(&out.join("events.csv"), |b| write_events_csv(b, &hits))?;

    let bars = load_bars(&bar_paths(&args.inputs)?, bar_frequency(&args.inputs)?)?;
    if let Some(bars) = bars.get(&asset_) {
        let dir = out.join("windows");
        create_dir(&dir)?;
        for hit in &hits {
            match extract_window(hit, &series, bars, pre, post) {
                Ok(w) => {
                    let base = format!("{asset_}_{}", stamp(hit.timestamp));
                    write_with(&dir.join(format!("{base}_flow.csv")), |b| {
                        write_track_csv(b, "net_inflow_musd", &w.flow_track)
                    })?;
                    write_with(&dir.join(format!("{base}_price.csv")), |b| {
                        write_track_csv(b, "close", &w.price_track)
                    })?;
                }
                Err(e @ EventsError::InsufficientCoverage { .. }) => {
                    log::warn!("skipping window for {asset_} {}: {e}", stamp(hit.timestamp));
                }
                Err(e) => return Err(e.into()),
            }
        }
    } else if !bars.is_empty() {
        log::warn!("no {asset_} bars given; windows not exported");
    }

    let mut summary = String::new();
    for y in &years {
        let n = per_year.get(y).copied().unwrap_or(0);
        let hits_in_year = hits.iter().filter(|h| h.year == *y).count();
        let _ = writeln!(
            summary,
            "{y}\thours={n}\thits={hits_in_year}\tthreshold={}",
            fmt17(threshold_percentile(k, n))
        );
    }
    Ok(summary)
}
