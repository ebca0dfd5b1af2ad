use std::collections::BTreeMap;
use std::fmt::Write as _;

use flowcast_core::time::format_utc;

use super::{bar_frequency, bar_paths, load_bars, load_flows, load_quotes, options_path};
use crate::args::InputArgs;
use crate::error::{CliError, Result};

/// Validates every supplied input and returns a tab-separated summary.
pub fn run(args: &InputArgs) -> Result<String> {
    if args.flows.is_none() && args.bars.is_empty() && args.options.is_none() {
        return Err(CliError::invalid(
            "nothing to check: pass --flows, --bars or --options",
        ));
    }
    let mut out = String::new();
    if args.flows.is_some() {
        let path = super::flows_path(args)?;
        let flows = load_flows(path)?;
        let mut per_asset: BTreeMap<_, (usize, _, _)> = BTreeMap::new();
        for r in &flows {
            let e = per_asset
                .entry(r.asset)
                .or_insert((0, r.timestamp, r.timestamp));
            e.0 += 1;
            e.1 = e.1.min(r.timestamp);
            e.2 = e.2.max(r.timestamp);
        }
        for (asset, (n, first, last)) in per_asset {
            let _ = writeln!(
                out,
                "flows\t{asset}\t{n}\t{}\t{}",
                format_utc(first),
                format_utc(last)
            );
        }
    }
    let paths = bar_paths(args)?;
    for (asset, bars) in load_bars(&paths, bar_frequency(args)?)? {
        let (first, last) = match (bars.bars.first(), bars.bars.last()) {
            (Some(a), Some(b)) => (format_utc(a.timestamp), format_utc(b.timestamp)),
            _ => ("N/A".into(), "N/A".into()),
        };
        let _ = writeln!(
            out,
            "bars\t{asset}\t{}\t{first}\t{last}\tgaps={}",
            bars.bars.len(),
            bars.gaps.len()
        );
    }
    if args.options.is_some() {
        let quotes = load_quotes(options_path(args)?)?;
        let times: std::collections::BTreeSet<_> = quotes.iter().map(|q| q.quote_time).collect();
        let _ = writeln!(
            out,
            "options\t{}\tquote_times={}",
            quotes.len(),
            times.len()
        );
    }
    Ok(out)
}
