use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use flowcast_core::regress::HeatmapCell;
use flowcast_core::time::format_duration;

use super::{write_file, DEFAULT_OUT};
use crate::args::ReportArgs;
use crate::error::{CliError, Result};

fn read_optional(path: &Path) -> Result<Option<String>> {
    match fs::read_to_string(path) {
        Ok(s) => Ok(Some(s)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(CliError::io(path, e)),
    }
}

fn md_row<S: AsRef<str>>(out: &mut String, cells: impl IntoIterator<Item = S>) {
    out.push('|');
    for c in cells {
        let _ = write!(out, " {} |", c.as_ref());
    }
    out.push('\n');
}

fn md_table(out: &mut String, header: &[String], rows: &[Vec<String>]) {
    md_row(out, header);
    md_row(out, header.iter().map(|_| "---"));
    for r in rows {
        md_row(out, r);
    }
    out.push('\n');
}

/// One row per (pair, target, model), one column per horizon.
fn heatmap_section(out: &mut String, cells: &[HeatmapCell]) {
    let mut horizons = Vec::new();
    let mut rows: BTreeMap<(String, &str, &str), BTreeMap<_, String>> = BTreeMap::new();
    let mut order = Vec::new();
    for c in cells {
        if !horizons.contains(&c.horizon) {
            horizons.push(c.horizon);
        }
        let key = (c.pair.label(), c.target.as_str(), c.model.as_str());
        if !rows.contains_key(&key) {
            order.push(key.clone());
        }
        rows.entry(key).or_default().insert(c.horizon, c.label());
    }
    let mut header = vec!["pair".to_string(), "target".into(), "model".into()];
    header.extend(horizons.iter().map(|h| format_duration(*h)));
    let body: Vec<Vec<String>> = order
        .iter()
        .map(|k| {
            let vals = &rows[k];
            let mut r = vec![k.0.clone(), k.1.to_string(), k.2.to_string()];
            r.extend(
                horizons
                    .iter()
                    .map(|h| vals.get(h).cloned().unwrap_or_else(|| "N/A".into())),
            );
            r
        })
        .collect();
    let starred = cells.iter().filter(|c| c.stars.is_significant()).count();
    let failed = cells.iter().filter(|c| c.error.is_some()).count();
    let _ = writeln!(out, "## Regression heatmap\n");
    let _ = writeln!(
        out,
        "{} cells, {starred} significant at 10% or better, {failed} failed.\n",
        cells.len()
    );
    md_table(out, &header, &body);
}

/// Renders a delimited text file as a Markdown table.
fn delimited_section(out: &mut String, title: &str, text: &str, sep: char) {
    let mut lines = text.lines().filter(|l| !l.is_empty());
    let Some(head) = lines.next() else { return };
    let header: Vec<String> = head.split(sep).map(str::to_string).collect();
    let rows: Vec<Vec<String>> = lines
        .map(|l| l.split(sep).map(str::to_string).collect())
        .collect();
    let _ = writeln!(out, "## {title}\n");
    let _ = writeln!(out, "{} rows.\n", rows.len());
    md_table(out, &header, &rows);
}

/// Collects whichever of `heatmap.json`, `backtest.tsv` and `events.csv`
/// exist under the directory into a single Markdown file.
pub fn run(args: &ReportArgs) -> Result<String> {
    let dir: PathBuf = args.dir.clone().unwrap_or_else(|| DEFAULT_OUT.into());
    let mut md = String::from("# flowcast report\n\n");
    let mut found = Vec::new();

    let heatmap = dir.join("heatmap.json");
    if let Some(s) = read_optional(&heatmap)? {
        let cells: Vec<HeatmapCell> = serde_json::from_str(&s)
            .map_err(|e| CliError::invalid(format!("{}: {e}", heatmap.display())))?;
        heatmap_section(&mut md, &cells);
        found.push("heatmap.json");
    }
    if let Some(s) = read_optional(&dir.join("backtest.tsv"))? {
        delimited_section(&mut md, "Option backtest", &s, '\t');
        found.push("backtest.tsv");
    }
    if let Some(s) = read_optional(&dir.join("events.csv"))? {
        delimited_section(&mut md, "Extreme inflow events", &s, ',');
        found.push("events.csv");
    }
    if found.is_empty() {
        return Err(CliError::invalid(format!(
            "{} holds none of heatmap.json, backtest.tsv or events.csv",
            dir.display()
        )));
    }
    let out = args.out.clone().unwrap_or_else(|| dir.join("report.md"));
    write_file(&out, md)?;
    Ok(format!("{}\t{}\n", out.display(), found.join(",")))
}
