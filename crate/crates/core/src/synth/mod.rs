//! Seeded synthetic markets with planted flow → return and flow → volatility
//! coefficients, plus a Black–Scholes option chain written on top of them.
//!
//! All randomness comes from a single ChaCha8 stream seeded from a `u64`, so
//! output is identical across runs and platforms.

mod chain;
mod market;
pub mod presets;

pub use chain::{black_scholes_call, gen_option_chain, IvSource, OptionChainSpec};
pub use market::{gen_market, Driver, FlowSpec, MarketConfig, PriceSpec, SyntheticMarket};

use chrono::TimeDelta;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{BarSeries, FlowRecord, OptionQuote};
use crate::time::{parse_utc, Timestamp};
use crate::Asset;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid synthetic config: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, SynthError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(SynthError::InvalidConfig(msg.into()))
}

pub fn default_start() -> Timestamp {
    parse_utc("2022-01-01T00:00:00Z").expect("valid literal")
}

/// Single-asset ETH market: hourly ETH flows driving the next hour's ETH
/// return and sub-bar volatility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub hours: usize,
    pub beta0: f64,
    /// Return loading on the previous hour's net inflow (US$M).
    pub beta1: f64,
    /// Return loading on the previous hour's return.
    pub beta2: f64,
    pub noise_sd: f64,
    pub flow_sd_musd: f64,
    /// Sub-bar log-return standard deviation absent flow effects.
    pub vol_base: f64,
    /// Volatility loading on the previous hour's net inflow (US$M).
    pub vol_beta1: f64,
    /// Persistence of volatility deviations from `vol_base`.
    pub vol_beta2: f64,
    pub option_chain: OptionChainSpec,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            hours: 1000,
            beta0: 0.0,
            beta1: 0.0,
            beta2: 0.0,
            noise_sd: 0.001,
            flow_sd_musd: 1.0,
            vol_base: 0.002,
            vol_beta1: 0.0,
            vol_beta2: 0.0,
            option_chain: OptionChainSpec::default(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hours < 100 {
            return invalid(format!("hours must be at least 100, got {}", self.hours));
        }
        if !(self.noise_sd >= 0.0) {
            return invalid(format!(
                "noise_sd must be non-negative, got {}",
                self.noise_sd
            ));
        }
        self.to_market().validate()
    }

    pub fn to_market(&self) -> MarketConfig {
        MarketConfig {
            seed: self.seed,
            start: default_start(),
            hours: self.hours,
            period_hours: 1,
            sub_bars_per_hour: 12,
            flows: vec![FlowSpec::new(Asset::Eth, self.flow_sd_musd)],
            prices: vec![PriceSpec {
                beta0: self.beta0,
                ret_ar: self.beta2,
                noise_sd: self.noise_sd,
                vol_base: self.vol_base,
                vol_ar: self.vol_beta2,
                drivers: vec![Driver {
                    asset: Asset::Eth,
                    ret_beta: self.beta1,
                    vol_beta: self.vol_beta1,
                }],
                ..PriceSpec::new(Asset::Eth)
            }],
        }
    }
}

/// Hourly flows and 5-minute ETH bars for `cfg`.
pub fn gen_flows_and_prices(cfg: &SynthConfig) -> Result<(Vec<FlowRecord>, BarSeries)> {
    cfg.validate()?;
    let mut m = gen_market(&cfg.to_market())?;
    let bars = m
        .bars
        .remove(&Asset::Eth)
        .expect("ETH price spec configured");
    Ok((m.flows, bars))
}

/// Quotes for `cfg.option_chain` over `bars`.
pub fn gen_config_chain(cfg: &SynthConfig, bars: &BarSeries) -> Result<Vec<OptionQuote>> {
    gen_option_chain(&cfg.option_chain, bars)
}

pub(crate) fn sub_frequency(sub_bars_per_hour: usize) -> TimeDelta {
    TimeDelta::seconds(3600 / sub_bars_per_hour as i64)
}
