use std::collections::BTreeMap;
use std::path::PathBuf;

use flowcast_core::ingest::{write_bars, write_flows, OptionQuote};
use flowcast_core::numfmt::to_json_17;
use flowcast_core::synth::{
    gen_config_chain, gen_market, gen_option_chain, presets, MarketConfig, OptionChainSpec,
    SynthConfig, SyntheticMarket,
};
use flowcast_core::Asset;
use serde::Serialize;

use super::{create_dir, write_file, write_with, DEFAULT_OUT};
use crate::args::SynthArgs;
use crate::error::{CliError, Result};

#[derive(Serialize)]
#[serde(untagged)]
enum Params<'a> {
    Simple(&'a SynthConfig),
    Market {
        market: &'a MarketConfig,
        #[serde(skip_serializing_if = "Option::is_none")]
        option_chain: Option<&'a OptionChainSpec>,
    },
}

#[derive(Serialize)]
struct Manifest<'a> {
    preset: &'a str,
    files: Vec<String>,
    params: Params<'a>,
}

fn generate(market: &MarketConfig) -> Result<SyntheticMarket> {
    market.validate()?;
    Ok(gen_market(market)?)
}

/// Writes `flows.csv`, one `bars_<ASSET>.csv` per priced asset, optionally
/// `options.csv`, and a `synth.json` manifest recording every parameter.
pub fn run(args: &SynthArgs) -> Result<String> {
    let preset = args.preset.as_deref().unwrap_or("simple");
    let with_options = args.with_options.unwrap_or(false);
    let seed = args.seed;
    let hours = args.hours;

    let simple_cfg;
    let market_cfg;
    let mut chain_spec: Option<OptionChainSpec> = None;
    let (m, quotes, params): (SyntheticMarket, Option<Vec<OptionQuote>>, Params) = match preset {
        "simple" => {
            let mut cfg = args.simple.clone().unwrap_or_default();
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(h) = hours {
                cfg.hours = h;
            }
            cfg.validate()?;
            simple_cfg = cfg;
            let m = gen_market(&simple_cfg.to_market())?;
            let q = match with_options {
                true => Some(gen_config_chain(&simple_cfg, &m.bars[&Asset::Eth])?),
                false => None,
            };
            (m, q, Params::Simple(&simple_cfg))
        }
        "null" | "heatmap" | "backtest" => {
            let seed = seed.unwrap_or(0);
            market_cfg = match preset {
                "null" => presets::null(seed, hours.unwrap_or(3000)),
                "heatmap" => {
                    let h = args.horizon.unwrap_or(1);
                    if h < 1 {
                        return Err(CliError::invalid(format!(
                            "horizon must be a positive hour count, got {h}"
                        )));
                    }
                    presets::heatmap(seed, h, hours.unwrap_or(8760))
                }
                _ => {
                    let (m, c) = presets::backtest(seed, hours.unwrap_or(1440));
                    chain_spec = Some(c);
                    m
                }
            };
            if with_options && chain_spec.is_none() {
                chain_spec = Some(OptionChainSpec::default());
            }
            let m = generate(&market_cfg)?;
            let q = match &chain_spec {
                Some(spec) => {
                    let eth = m
                        .bars
                        .get(&Asset::Eth)
                        .ok_or_else(|| CliError::invalid("option chain needs ETH bars"))?;
                    Some(gen_option_chain(spec, eth)?)
                }
                None => None,
            };
            (
                m,
                q,
                Params::Market {
                    market: &market_cfg,
                    option_chain: chain_spec.as_ref(),
                },
            )
        }
        other => {
            return Err(CliError::invalid(format!(
                "unknown preset {other:?}; expected simple, null, heatmap or backtest"
            )))
        }
    };

    let out: PathBuf = args.out.clone().unwrap_or_else(|| DEFAULT_OUT.into());
    create_dir(&out)?;
    let mut files = vec!["flows.csv".to_string()];
    write_with(&out.join("flows.csv"), |b| write_flows(b, &m.flows))?;
    let mut counts = BTreeMap::new();
    for (asset, bars) in &m.bars {
        let name = format!("bars_{asset}.csv");
        write_with(&out.join(&name), |b| write_bars(b, &bars.bars))?;
        counts.insert(name.clone(), bars.bars.len());
        files.push(name);
    }
    if let Some(q) = &quotes {
        write_with(&out.join("options.csv"), |b| {
            flowcast_core::ingest::write_option_quotes(b, q)
        })?;
        counts.insert("options.csv".into(), q.len());
        files.push("options.csv".into());
    }
    let manifest = Manifest {
        preset,
        files,
        params,
    };
    let json = to_json_17(&manifest).map_err(|e| CliError::invalid(format!("manifest: {e}")))?;
    write_file(&out.join("synth.json"), json + "\n")?;

    let mut summary = format!("flows.csv\t{}\n", m.flows.len());
    for (name, n) in counts {
        summary.push_str(&format!("{name}\t{n}\n"));
    }
    Ok(summary)
}
