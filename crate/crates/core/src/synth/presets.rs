//! Ready-made market configurations.

use super::market::{Driver, FlowSpec, MarketConfig, PriceSpec};
use super::{IvSource, OptionChainSpec};
use crate::regress::{Model, Pair, Target};
use crate::Asset;

/// A heatmap cell with a planted non-zero coefficient and its expected sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedCell {
    pub pair: Pair,
    pub target: Target,
    pub horizon_hours: i64,
    pub model: Model,
    pub beta1: f64,
}

// (predictor, response, target, horizon, single, double); `None` marks a
// coefficient that is not planted for that model.
type Row = (Asset, Asset, Target, i64, Option<f64>, Option<f64>);

const RET: Target = Target::Return;
const VOL: Target = Target::Volatility;
const USDT: Asset = Asset::Usdt;
const ETH: Asset = Asset::Eth;
const BTC: Asset = Asset::Btc;

#[rustfmt::skip]
const REFERENCE_HEATMAP: &[Row] = &[
    (USDT, ETH, RET, 1, Some(1.1e-5), Some(1.1e-5)),
    (USDT, ETH, RET, 2, Some(7.5e-6), Some(8.4e-6)),
    (USDT, ETH, VOL, 1, Some(-2.0e-4), None),
    (USDT, ETH, VOL, 6, Some(-2.9e-4), Some(-1.9e-4)),
    (ETH, ETH, RET, 1, Some(-0.017), Some(-0.017)),
    (ETH, ETH, RET, 2, Some(-0.0078), Some(-0.0083)),
    (ETH, ETH, RET, 3, Some(-0.0088), Some(-0.010)),
    (ETH, ETH, RET, 4, Some(-0.013), Some(-0.014)),
    (ETH, ETH, RET, 6, Some(-0.026), Some(-0.027)),
    (ETH, ETH, VOL, 1, Some(-0.80), None),
    (ETH, ETH, VOL, 2, Some(-0.88), Some(-0.37)),
    (ETH, ETH, VOL, 3, Some(-0.89), Some(-0.35)),
    (ETH, ETH, VOL, 4, Some(-0.87), Some(-0.22)),
    (ETH, ETH, VOL, 6, Some(-0.87), Some(-0.30)),
    (USDT, BTC, RET, 1, Some(6.3e-6), Some(6.5e-6)),
    (USDT, BTC, RET, 2, Some(4.3e-6), Some(4.8e-6)),
    (USDT, BTC, VOL, 6, Some(-2.3e-4), Some(-1.9e-4)),
    (BTC, BTC, RET, 4, Some(0.095), Some(0.099)),
    (BTC, BTC, VOL, 1, Some(-17.0), None),
    (BTC, BTC, VOL, 2, Some(-13.0), None),
    (BTC, BTC, VOL, 3, Some(-13.0), Some(-2.8)),
    (BTC, BTC, VOL, 4, Some(-11.0), None),
    (BTC, BTC, VOL, 6, Some(-17.0), Some(-4.2)),
];

/// Every significant cell of the reference heatmap with its coefficient.
pub fn heatmap_cells() -> Vec<PlantedCell> {
    let mut out = Vec::new();
    for &(p, r, target, h, single, double) in REFERENCE_HEATMAP {
        let pair = Pair {
            predictor: p,
            response: r,
        };
        for (model, beta) in [(Model::Single, single), (Model::Double, double)] {
            if let Some(beta1) = beta {
                out.push(PlantedCell {
                    pair,
                    target,
                    horizon_hours: h,
                    model,
                    beta1,
                });
            }
        }
    }
    out
}

/// Coefficient planted for one pair and target at horizon `h`: the single
/// model value where present, else the double model value, else zero.
fn planted(p: Asset, r: Asset, target: Target, h: i64) -> f64 {
    REFERENCE_HEATMAP
        .iter()
        .find(|row| row.0 == p && row.1 == r && row.2 == target && row.3 == h)
        .and_then(|row| row.4.or(row.5))
        .unwrap_or(0.0)
}

/// Net inflow spread per planting period, in US$M.
const FLOW_SD: [(Asset, f64); 3] = [(USDT, 1.0), (ETH, 1e-3), (BTC, 1e-5)];

fn flows(period_hours: usize) -> Vec<FlowSpec> {
    let per_hour = (period_hours as f64).sqrt();
    FLOW_SD
        .iter()
        .map(|&(a, sd)| FlowSpec::new(a, sd / per_hour))
        .collect()
}

fn price(asset: Asset, drivers: Vec<Driver>) -> PriceSpec {
    PriceSpec {
        noise_sd: 2e-6,
        vol_base: 0.003,
        vol_ar: 0.5,
        drivers,
        ..PriceSpec::new(asset)
    }
}

/// Three flow assets driving ETH and BTC with the reference heatmap's
/// coefficients for horizon `h`, planted on `h`-hour periods. `hours` is
/// rounded down to a whole number of periods.
pub fn heatmap(seed: u64, horizon_hours: i64, hours: usize) -> MarketConfig {
    let period = horizon_hours as usize;
    let drivers = |resp: Asset| {
        [USDT, resp]
            .into_iter()
            .map(|p| Driver {
                asset: p,
                ret_beta: planted(p, resp, RET, horizon_hours),
                vol_beta: planted(p, resp, VOL, horizon_hours),
            })
            .collect::<Vec<_>>()
    };
    MarketConfig {
        seed,
        hours: hours - hours % period,
        period_hours: period,
        flows: flows(period),
        prices: vec![price(ETH, drivers(ETH)), price(BTC, drivers(BTC))],
        ..MarketConfig::default()
    }
}

/// Same assets as [`heatmap`] with no flow effects and no persistence.
pub fn null(seed: u64, hours: usize) -> MarketConfig {
    let mut p = [price(ETH, Vec::new()), price(BTC, Vec::new())];
    for s in &mut p {
        s.vol_ar = 0.0;
        s.noise_sd = 1e-3;
    }
    MarketConfig {
        seed,
        hours,
        flows: flows(1),
        prices: p.to_vec(),
        ..MarketConfig::default()
    }
}

/// ETH market where high inflow hours precede a volatility drop, with a
/// chain whose IV tracks hourly realized volatility.
pub fn backtest(seed: u64, hours: usize) -> (MarketConfig, OptionChainSpec) {
    let eth = PriceSpec {
        noise_sd: 1e-3,
        vol_base: 0.003,
        vol_floor: 2e-4,
        drivers: vec![Driver {
            asset: ETH,
            ret_beta: 0.0,
            vol_beta: -0.8,
        }],
        ..PriceSpec::new(ETH)
    };
    let market = MarketConfig {
        seed,
        hours,
        flows: vec![FlowSpec::new(ETH, 1e-3)],
        prices: vec![eth],
        ..MarketConfig::default()
    };
    let chain = OptionChainSpec {
        iv: IvSource::Realized { window_hours: 1 },
        ..OptionChainSpec::default()
    };
    (market, chain)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_cells_listed() {
        let cells = heatmap_cells();
        assert_eq!(cells.len(), 41);
        assert_eq!(planted(ETH, ETH, RET, 1), -0.017);
        assert_eq!(planted(USDT, ETH, RET, 3), 0.0);
        assert_eq!(planted(BTC, BTC, VOL, 3), -13.0);
    }

    #[test]
    fn presets_validate() {
        for h in [1, 2, 3, 4, 6] {
            heatmap(0, h, 120).validate().unwrap();
        }
        null(0, 100).validate().unwrap();
        let (m, c) = backtest(0, 48);
        m.validate().unwrap();
        c.validate().unwrap();
    }
}
