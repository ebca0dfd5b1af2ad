//! Exchange-flow analytics for crypto markets.
//!
//! The crate turns hourly exchange inflow/outflow observations and price bars
//! into net-inflow, return and realized-volatility series, fits multi-horizon
//! predictive regressions, flags extreme flow hours, and backtests
//! delta-hedged call-option strategies keyed on flow percentiles.
//!
//! Module map:
//! - [`ingest`]: CSV contracts for flows, bars and option quotes.
//! - [`series`]: bucketed net inflows, returns, realized volatility, alignment.
//! - [`regress`]: OLS core, significance stars, heatmap grids.
//! - [`events`]: per-year extreme-hour detection and case windows.
//! - [`options`]: trade accounting, cost model, bucketed statistics.
//! - [`synth`]: seeded synthetic markets with planted coefficients.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod events;
pub mod ingest;
pub mod numfmt;
pub mod options;
pub mod regress;
pub mod series;
pub mod synth;
pub mod time;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Assets covered by the flow datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Asset {
    Btc,
    Eth,
    Usdt,
}

impl Asset {
    pub const ALL: [Asset; 3] = [Asset::Btc, Asset::Eth, Asset::Usdt];

    pub fn as_str(self) -> &'static str {
        match self {
            Asset::Btc => "BTC",
            Asset::Eth => "ETH",
            Asset::Usdt => "USDT",
        }
    }
}

impl fmt::Display for Asset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown asset '{0}' (expected BTC, ETH or USDT)")]
pub struct UnknownAsset(pub String);

impl FromStr for Asset {
    type Err = UnknownAsset;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "BTC" => Ok(Asset::Btc),
            "ETH" => Ok(Asset::Eth),
            "USDT" => Ok(Asset::Usdt),
            _ => Err(UnknownAsset(s.to_string())),
        }
    }
}

/// One million US dollars; net inflows enter regressions in this unit.
pub const USD_PER_MILLION: f64 = 1e6;

/// Converts a raw US-dollar amount to US$ millions.
pub fn usd_to_musd(usd: f64) -> f64 {
    usd / USD_PER_MILLION
}
