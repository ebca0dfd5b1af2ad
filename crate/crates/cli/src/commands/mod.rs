mod backtest;
mod events;
mod ingest_check;
mod regress;
mod report;
mod synth;

pub use backtest::run as backtest;
pub use events::run as events;
pub use ingest_check::run as ingest_check;
pub use regress::run as regress;
pub use report::run as report;
pub use synth::run as synth;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::TimeDelta;
use flowcast_core::ingest::{
    parse_bars, parse_flows, parse_option_quotes, BarSeries, FlowRecord, OptionQuote,
};
use flowcast_core::time::{minutes, parse_duration};
use flowcast_core::Asset;

use crate::args::InputArgs;
use crate::error::{ingest, CliError, Result};

pub const DEFAULT_OUT: &str = "out";

fn require_file(path: &Path, what: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::invalid(format!(
            "{what} file not found: {}",
            path.display()
        )))
    }
}

pub fn duration(s: &str, what: &str) -> Result<TimeDelta> {
    parse_duration(s)
        .filter(|d| *d > TimeDelta::zero())
        .ok_or_else(|| CliError::invalid(format!("invalid {what} duration {s:?}")))
}

pub fn asset(s: &str) -> Result<Asset> {
    s.parse().map_err(|e| CliError::invalid(format!("{e}")))
}

/// Parsed `ASSET=PATH` bar specs, checked for existence.
pub fn bar_paths(inputs: &InputArgs) -> Result<Vec<(Asset, PathBuf)>> {
    let mut out: Vec<(Asset, PathBuf)> = Vec::new();
    for spec in &inputs.bars {
        let (a, p) = spec
            .split_once('=')
            .ok_or_else(|| CliError::invalid(format!("--bars expects ASSET=PATH, got {spec:?}")))?;
        let a = asset(a.trim())?;
        if out.iter().any(|(x, _)| *x == a) {
            return Err(CliError::invalid(format!("bars given twice for {a}")));
        }
        let p = PathBuf::from(p.trim());
        require_file(&p, &format!("{a} bars"))?;
        out.push((a, p));
    }
    Ok(out)
}

pub fn bar_frequency(inputs: &InputArgs) -> Result<TimeDelta> {
    inputs
        .bar_freq
        .as_deref()
        .map_or(Ok(minutes(5)), |s| duration(s, "bar frequency"))
}

pub fn flows_path(inputs: &InputArgs) -> Result<&Path> {
    let p = inputs
        .flows
        .as_deref()
        .ok_or_else(|| CliError::invalid("a flows file is required (--flows)"))?;
    require_file(p, "flows")?;
    Ok(p)
}

pub fn options_path(inputs: &InputArgs) -> Result<&Path> {
    let p = inputs
        .options
        .as_deref()
        .ok_or_else(|| CliError::invalid("an option quotes file is required (--options)"))?;
    require_file(p, "options")?;
    Ok(p)
}

pub fn load_flows(path: &Path) -> Result<Vec<FlowRecord>> {
    let flows = parse_flows(path).map_err(|e| ingest(path, e))?;
    log::info!("{}: {} flow records", path.display(), flows.len());
    Ok(flows)
}

pub fn load_bars(
    paths: &[(Asset, PathBuf)],
    freq: TimeDelta,
) -> Result<BTreeMap<Asset, BarSeries>> {
    let mut out = BTreeMap::new();
    for (a, p) in paths {
        let bars = parse_bars(p, freq).map_err(|e| ingest(p, e))?;
        if !bars.gaps.is_empty() {
            log::warn!("{}: {} missing bars", p.display(), bars.gaps.len());
        }
        out.insert(*a, bars);
    }
    Ok(out)
}

pub fn load_quotes(path: &Path) -> Result<Vec<OptionQuote>> {
    let q = parse_option_quotes(path).map_err(|e| ingest(path, e))?;
    log::info!("{}: {} option quotes", path.display(), q.len());
    Ok(q)
}

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

/// Renders into memory with `f`, then writes the file in one go.
pub fn write_with(path: &Path, f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| CliError::io(path, e))?;
    write_file(path, buf)
}
