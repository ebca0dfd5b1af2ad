use std::path::PathBuf;

use flowcast_core::regress::{
    daily_weekly_grid, grid_to_json, grid_to_tsv, run_grid, Covariance, GridData, GridSpec,
    HeatmapCell, Model, OlsOptions, Pair, Target,
};

use super::{
    bar_frequency, bar_paths, create_dir, duration, flows_path, load_bars, load_flows, write_file,
    DEFAULT_OUT,
};
use crate::args::RegressArgs;
use crate::error::{CliError, Result};

fn pair(s: &str) -> Result<Pair> {
    let (p, r) = s
        .split_once('>')
        .ok_or_else(|| CliError::invalid(format!("pair {s:?} must look like USDT>ETH")))?;
    Ok(Pair::new(super::asset(p.trim())?, super::asset(r.trim())?))
}

fn target(s: &str) -> Result<Target> {
    match s.trim().to_ascii_lowercase().as_str() {
        "return" | "returns" => Ok(Target::Return),
        "volatility" | "vol" => Ok(Target::Volatility),
        other => Err(CliError::invalid(format!("unknown target {other:?}"))),
    }
}

fn model(s: &str) -> Result<Model> {
    match s.trim().to_ascii_lowercase().as_str() {
        "single" => Ok(Model::Single),
        "double" => Ok(Model::Double),
        other => Err(CliError::invalid(format!("unknown model {other:?}"))),
    }
}

fn spec(args: &RegressArgs) -> Result<GridSpec> {
    let mut spec = GridSpec::default();
    if !args.horizons.is_empty() {
        spec.horizons = args
            .horizons
            .iter()
            .map(|h| duration(h.trim(), "horizon"))
            .collect::<Result<_>>()?;
    }
    if !args.pairs.is_empty() {
        spec.pairs = args.pairs.iter().map(|p| pair(p)).collect::<Result<_>>()?;
    }
    if !args.targets.is_empty() {
        spec.targets = args
            .targets
            .iter()
            .map(|t| target(t))
            .collect::<Result<_>>()?;
    }
    if !args.models.is_empty() {
        spec.models = args
            .models
            .iter()
            .map(|m| model(m))
            .collect::<Result<_>>()?;
    }
    if let Some(s) = &args.sub_freq {
        spec.sub_frequency = duration(s, "sub-bar")?;
    }
    if let Some(n) = args.min_obs {
        spec.min_obs = n;
    }
    if args.newey_west.unwrap_or(false) || args.nw_lags.is_some() {
        spec.ols = OlsOptions {
            covariance: Covariance::NeweyWest { lags: args.nw_lags },
        };
    }
    Ok(spec)
}

fn summarize(cells: &[HeatmapCell]) -> (usize, usize) {
    let failed = cells.iter().filter(|c| c.error.is_some()).count();
    let starred = cells.iter().filter(|c| c.stars.is_significant()).count();
    (failed, starred)
}

/// Writes `heatmap.json` and `heatmap.tsv` (plus the daily/weekly pair when
/// requested) and returns a one-line summary per grid.
pub fn run(args: &RegressArgs) -> Result<String> {
    let spec = spec(args)?;
    let flows = load_flows(flows_path(&args.inputs)?)?;
    let bars = load_bars(&bar_paths(&args.inputs)?, bar_frequency(&args.inputs)?)?;
    let out: PathBuf = args.out.clone().unwrap_or_else(|| DEFAULT_OUT.into());
    create_dir(&out)?;
    let data = GridData { flows, bars };

    let mut grids = vec![("heatmap", run_grid(&data, &spec))];
    if args.daily_weekly.unwrap_or(false) {
        grids.push(("daily_weekly", daily_weekly_grid(&data, &spec)));
    }
    let mut summary = String::new();
    let mut any_ok = false;
    for (name, cells) in &grids {
        write_file(&out.join(format!("{name}.json")), grid_to_json(cells))?;
        write_file(&out.join(format!("{name}.tsv")), grid_to_tsv(cells))?;
        let (failed, starred) = summarize(cells);
        for c in cells.iter().filter(|c| c.error.is_some()) {
            log::warn!(
                "{} {} {} {}: {}",
                c.pair.label(),
                c.target.as_str(),
                c.model.as_str(),
                flowcast_core::time::format_duration(c.horizon),
                c.label()
            );
        }
        any_ok |= failed < cells.len();
        summary.push_str(&format!(
            "{name}\tcells={}\tfailed={failed}\tstarred={starred}\n",
            cells.len()
        ));
    }
    if !any_ok {
        return Err(CliError::Estimation(format!(
            "every regression cell failed; see {}",
            out.join("heatmap.json").display()
        )));
    }
    Ok(summary)
}
