use std::collections::BTreeMap;

use chrono::TimeDelta;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{default_start, invalid, sub_frequency, Result};
use crate::ingest::{Bar, BarSeries, FlowRecord};
use crate::time::{hours, is_aligned, Timestamp};
use crate::{Asset, USD_PER_MILLION};

/// Hourly net inflow `NI ~ N(0, sd_musd)` in US$M, split into non-negative
/// inflow and outflow around a constant gross volume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSpec {
    pub asset: Asset,
    pub sd_musd: f64,
    #[serde(default)]
    pub gross_musd: f64,
}

impl FlowSpec {
    pub fn new(asset: Asset, sd_musd: f64) -> Self {
        Self {
            asset,
            sd_musd,
            gross_musd: 0.0,
        }
    }
}

/// Loadings of one price on one flow asset's previous-period net inflow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Driver {
    pub asset: Asset,
    #[serde(default)]
    pub ret_beta: f64,
    #[serde(default)]
    pub vol_beta: f64,
}

/// Price dynamics per period `k`:
///
/// ```text
/// R[k+1]     = beta0 + Σ ret_beta·NI[k] + ret_ar·R[k] + noise_sd·ε
/// sigma[k+1] = max(vol_floor, vol_base + Σ vol_beta·NI[k] + vol_ar·(sigma[k] − vol_base))
/// ```
///
/// The period's sub-bar log returns are `ln(1+R)/m + sigma·(z_j − z̄)`, so
/// the period return is exactly `R` and the sub-bar dispersion tracks `sigma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSpec {
    pub asset: Asset,
    pub initial_price: f64,
    pub beta0: f64,
    pub ret_ar: f64,
    pub noise_sd: f64,
    pub vol_base: f64,
    pub vol_ar: f64,
    pub vol_floor: f64,
    pub drivers: Vec<Driver>,
}

impl PriceSpec {
    pub fn new(asset: Asset) -> Self {
        let initial_price = match asset {
            Asset::Btc => 40_000.0,
            Asset::Eth => 2_000.0,
            Asset::Usdt => 1.0,
        };
        Self {
            asset,
            initial_price,
            beta0: 0.0,
            ret_ar: 0.0,
            noise_sd: 0.001,
            vol_base: 0.002,
            vol_ar: 0.0,
            vol_floor: 1e-5,
            drivers: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketConfig {
    pub seed: u64,
    pub start: Timestamp,
    pub hours: usize,
    /// Length in hours of the period on which the relations are planted.
    pub period_hours: usize,
    pub sub_bars_per_hour: usize,
    pub flows: Vec<FlowSpec>,
    pub prices: Vec<PriceSpec>,
}

impl Default for MarketConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            start: default_start(),
            hours: 1000,
            period_hours: 1,
            sub_bars_per_hour: 12,
            flows: Vec::new(),
            prices: Vec::new(),
        }
    }
}

impl MarketConfig {
    pub fn sub_frequency(&self) -> TimeDelta {
        sub_frequency(self.sub_bars_per_hour)
    }

    pub fn validate(&self) -> Result<()> {
        if self.period_hours == 0
            || self.hours == 0
            || !self.hours.is_multiple_of(self.period_hours)
        {
            return invalid(format!(
                "hours ({}) must be a positive multiple of period_hours ({})",
                self.hours, self.period_hours
            ));
        }
        if self.sub_bars_per_hour == 0 || 3600 % self.sub_bars_per_hour != 0 {
            return invalid(format!(
                "sub_bars_per_hour {} does not divide an hour",
                self.sub_bars_per_hour
            ));
        }
        if !is_aligned(self.start, hours(self.period_hours as i64)) {
            return invalid("start is not aligned to the planting period");
        }
        let mut seen = Vec::new();
        for f in &self.flows {
            if !(f.sd_musd >= 0.0 && f.sd_musd.is_finite())
                || !(f.gross_musd >= 0.0 && f.gross_musd.is_finite())
            {
                return invalid(format!(
                    "flow spec for {} needs finite non-negative sd and gross",
                    f.asset
                ));
            }
            if seen.contains(&f.asset) {
                return invalid(format!("duplicate flow spec for {}", f.asset));
            }
            seen.push(f.asset);
        }
        let mut priced = Vec::new();
        for p in &self.prices {
            if priced.contains(&p.asset) {
                return invalid(format!("duplicate price spec for {}", p.asset));
            }
            priced.push(p.asset);
            if !(p.initial_price > 0.0 && p.initial_price.is_finite()) {
                return invalid(format!("{} initial price must be positive", p.asset));
            }
            if !(p.noise_sd >= 0.0) || !(p.vol_base >= 0.0) || !(p.vol_floor > 0.0) {
                return invalid(format!(
                    "{} needs noise_sd >= 0, vol_base >= 0, vol_floor > 0",
                    p.asset
                ));
            }
            for d in &p.drivers {
                if !seen.contains(&d.asset) {
                    return invalid(format!(
                        "{} is driven by {} flows, which are not generated",
                        p.asset, d.asset
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticMarket {
    /// Hourly records, sorted by asset then timestamp.
    pub flows: Vec<FlowRecord>,
    pub bars: BTreeMap<Asset, BarSeries>,
}

struct PriceState {
    ret: f64,
    sigma: f64,
    close: f64,
    bars: Vec<Bar>,
}

/// Generates flows and bars. Draw order per period: hourly flows for each
/// flow spec in order, then per price spec its return shock followed by its
/// sub-bar shocks.
pub fn gen_market(cfg: &MarketConfig) -> Result<SyntheticMarket> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let p = cfg.period_hours;
    let periods = cfg.hours / p;
    let m = p * cfg.sub_bars_per_hour;
    let sub = cfg.sub_frequency();

    let mut flows: Vec<Vec<FlowRecord>> = cfg
        .flows
        .iter()
        .map(|_| Vec::with_capacity(cfg.hours))
        .collect();
    let mut states: Vec<PriceState> = cfg
        .prices
        .iter()
        .map(|s| {
            let mut bars = Vec::with_capacity(periods * m + 1);
            bars.push(Bar {
                timestamp: cfg.start,
                open: s.initial_price,
                high: s.initial_price,
                low: s.initial_price,
                close: s.initial_price,
            });
            PriceState {
                ret: 0.0,
                sigma: s.vol_base,
                close: s.initial_price,
                bars,
            }
        })
        .collect();
    let mut prev_ni = vec![0.0; cfg.flows.len()];
    let mut ni = vec![0.0; cfg.flows.len()];
    let mut z = vec![0.0; m];

    for k in 0..periods {
        for (fi, spec) in cfg.flows.iter().enumerate() {
            let mut total = 0.0;
            for j in 0..p {
                let e: f64 = rng.sample(StandardNormal);
                let net = spec.sd_musd * e;
                total += net;
                flows[fi].push(FlowRecord {
                    timestamp: cfg.start + hours((k * p + j) as i64),
                    asset: spec.asset,
                    inflow_usd: (spec.gross_musd + net.max(0.0)) * USD_PER_MILLION,
                    outflow_usd: (spec.gross_musd + (-net).max(0.0)) * USD_PER_MILLION,
                });
            }
            ni[fi] = total;
        }

        for (spec, st) in cfg.prices.iter().zip(states.iter_mut()) {
            let eps: f64 = rng.sample(StandardNormal);
            let (mut r, mut sigma) = if k == 0 {
                (spec.beta0, spec.vol_base)
            } else {
                (
                    spec.beta0 + spec.ret_ar * st.ret,
                    spec.vol_base + spec.vol_ar * (st.sigma - spec.vol_base),
                )
            };
            if k > 0 {
                for d in &spec.drivers {
                    let x = prev_ni[cfg
                        .flows
                        .iter()
                        .position(|f| f.asset == d.asset)
                        .expect("validated")];
                    r += d.ret_beta * x;
                    sigma += d.vol_beta * x;
                }
            }
            r = (r + spec.noise_sd * eps).max(-0.99);
            sigma = sigma.max(spec.vol_floor);
            st.ret = r;
            st.sigma = sigma;

            for zj in z.iter_mut() {
                *zj = rng.sample(StandardNormal);
            }
            let zbar = z.iter().sum::<f64>() / m as f64;
            let drift = r.ln_1p() / m as f64;
            let base = k * m;
            for (j, zj) in z.iter().enumerate() {
                let open = st.close;
                let close = open * (drift + sigma * (zj - zbar)).exp();
                st.close = close;
                st.bars.push(Bar {
                    timestamp: cfg.start + sub * (base + j + 1) as i32,
                    open,
                    high: open.max(close),
                    low: open.min(close),
                    close,
                });
            }
        }
        std::mem::swap(&mut prev_ni, &mut ni);
    }

    let mut by_asset: Vec<(Asset, Vec<FlowRecord>)> =
        cfg.flows.iter().map(|f| f.asset).zip(flows).collect();
    by_asset.sort_by_key(|(a, _)| *a);
    let bars = cfg
        .prices
        .iter()
        .zip(states)
        .map(|(s, st)| (s.asset, BarSeries::from_sorted(sub, st.bars)))
        .collect();
    Ok(SyntheticMarket {
        flows: by_asset.into_iter().flat_map(|(_, v)| v).collect(),
        bars,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eth_market(seed: u64) -> MarketConfig {
        MarketConfig {
            seed,
            hours: 240,
            period_hours: 2,
            flows: vec![
                FlowSpec::new(Asset::Eth, 1.0),
                FlowSpec::new(Asset::Usdt, 5.0),
            ],
            prices: vec![PriceSpec {
                drivers: vec![Driver {
                    asset: Asset::Usdt,
                    ret_beta: 1e-4,
                    vol_beta: 0.0,
                }],
                ..PriceSpec::new(Asset::Eth)
            }],
            ..MarketConfig::default()
        }
    }

    #[test]
    fn shapes() {
        let m = gen_market(&eth_market(1)).unwrap();
        assert_eq!(m.flows.len(), 480);
        assert_eq!(m.flows[0].asset, Asset::Eth);
        assert_eq!(m.flows[240].asset, Asset::Usdt);
        let bars = &m.bars[&Asset::Eth];
        assert_eq!(bars.bars.len(), 240 * 12 + 1);
        assert!(bars.gaps.is_empty());
        for w in bars.bars.windows(2) {
            assert_eq!(w[1].open, w[0].close);
            assert!(
                w[1].low <= w[1].open.min(w[1].close) && w[1].high >= w[1].open.max(w[1].close)
            );
        }
        for f in &m.flows {
            assert!(f.inflow_usd >= 0.0 && f.outflow_usd >= 0.0);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(
            gen_market(&eth_market(7)).unwrap(),
            gen_market(&eth_market(7)).unwrap()
        );
        assert_ne!(
            gen_market(&eth_market(7)).unwrap(),
            gen_market(&eth_market(8)).unwrap()
        );
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = eth_market(0);
        c.hours = 241;
        assert!(gen_market(&c).is_err());
        let mut c = eth_market(0);
        c.prices[0].drivers[0].asset = Asset::Btc;
        assert!(gen_market(&c).is_err());
        let mut c = eth_market(0);
        c.sub_bars_per_hour = 7;
        assert!(gen_market(&c).is_err());
    }
}
