use std::collections::BTreeMap;

use chrono::{Days, TimeDelta};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{invalid, Result};
use crate::ingest::{BarSeries, OptionQuote};
use crate::series::realized_vol;
use crate::time::{floor_to, hours, is_aligned, Timestamp};

const SECONDS_PER_YEAR: f64 = 365.0 * 86_400.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IvSource {
    /// Constant annualized volatility.
    Fixed(f64),
    /// Annualized realized volatility of the `window`-long bucket containing
    /// the quote time.
    Realized { window_hours: i64 },
}

/// Strike grid, expiry ladder and quote cadence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptionChainSpec {
    pub cadence_minutes: i64,
    /// Daily expiries at this UTC hour.
    pub expiry_hour: u32,
    /// Number of nearest live expiries quoted at each time.
    pub expiries: usize,
    /// Strike grid as offsets from spot at listing, in units of `strike_step`.
    pub strike_lo: i32,
    pub strike_hi: i32,
    /// Relative strike spacing.
    pub strike_step: f64,
    /// Absolute rounding unit for strikes.
    pub strike_tick: f64,
    pub iv: IvSource,
}

impl Default for OptionChainSpec {
    fn default() -> Self {
        Self {
            cadence_minutes: 60,
            expiry_hour: 8,
            expiries: 2,
            strike_lo: -5,
            strike_hi: 10,
            strike_step: 0.01,
            strike_tick: 1.0,
            iv: IvSource::Fixed(0.8),
        }
    }
}

impl OptionChainSpec {
    pub fn validate(&self) -> Result<()> {
        if self.cadence_minutes <= 0 || self.expiry_hour > 23 || self.expiries == 0 {
            return invalid("cadence must be positive, expiry_hour in 0..=23, at least one expiry");
        }
        if self.strike_lo > self.strike_hi || !(self.strike_step > 0.0) || !(self.strike_tick > 0.0)
        {
            return invalid("strike grid needs lo <= hi and positive step and tick");
        }
        if 1.0 + self.strike_lo as f64 * self.strike_step <= 0.0 {
            return invalid("lowest strike would be non-positive");
        }
        match self.iv {
            IvSource::Fixed(v) if !(v > 0.0 && v.is_finite()) => {
                invalid("fixed IV must be positive")
            }
            IvSource::Realized { window_hours } if window_hours <= 0 => {
                invalid("IV window must be positive")
            }
            _ => Ok(()),
        }
    }
}

/// Zero-rate Black–Scholes call value and delta for spot `s`, strike `k`,
/// annualized volatility `sigma` and `t` years to expiry.
pub fn black_scholes_call(s: f64, k: f64, sigma: f64, t: f64) -> (f64, f64) {
    let sd = sigma * t.sqrt();
    if !(sd > 0.0) {
        return if s > k { (s - k, 1.0) } else { (0.0, 0.0) };
    }
    let n = Normal::standard();
    let d1 = ((s / k).ln() + 0.5 * sd * sd) / sd;
    let d2 = d1 - sd;
    let value = (s * n.cdf(d1) - k * n.cdf(d2)).max(0.0);
    (value, n.cdf(d1))
}

fn next_expiries(t: Timestamp, hour: u32, count: usize) -> Vec<Timestamp> {
    let day = floor_to(t, hours(24));
    let mut first = day + hours(hour as i64);
    if first <= t {
        first = first + Days::new(1);
    }
    (0..count as u64).map(|i| first + Days::new(i)).collect()
}

/// Quotes every live instrument at each cadence point covered by `bars`.
///
/// The index price is the open of the bar at the quote time. An expiry's
/// strike grid is fixed from spot when it first enters the ladder. Quote times
/// with no IV estimate (realized source, incomplete window) are skipped.
/// Output is sorted by quote time, expiry, strike.
pub fn gen_option_chain(spec: &OptionChainSpec, bars: &BarSeries) -> Result<Vec<OptionQuote>> {
    spec.validate()?;
    let (Some(first), Some(last)) = (bars.bars.first(), bars.bars.last()) else {
        return invalid("bars are empty");
    };
    let cadence = TimeDelta::minutes(spec.cadence_minutes);
    let realized: Option<(TimeDelta, BTreeMap<Timestamp, f64>)> = match spec.iv {
        IvSource::Fixed(_) => None,
        IvSource::Realized { window_hours } => {
            let w = hours(window_hours);
            let vol = realized_vol(bars, w, bars.frequency)
                .map_err(|e| super::SynthError::InvalidConfig(e.to_string()))?;
            let scale = (SECONDS_PER_YEAR / bars.frequency.num_seconds() as f64).sqrt();
            Some((
                w,
                vol.points
                    .into_iter()
                    .map(|(t, v)| (t, v * scale))
                    .collect(),
            ))
        }
    };

    let mut grids: BTreeMap<Timestamp, Vec<f64>> = BTreeMap::new();
    let mut out = Vec::new();
    let mut t = first.timestamp;
    while !is_aligned(t, cadence) {
        t += bars.frequency;
    }
    while t <= last.timestamp {
        let (Some(i), iv) = (bars.index_of(t), quote_iv(spec, &realized, t)) else {
            t += cadence;
            continue;
        };
        let Some(iv) = iv else {
            t += cadence;
            continue;
        };
        let spot = bars.bars[i].open;
        for expiry in next_expiries(t, spec.expiry_hour, spec.expiries) {
            let strikes = grids
                .entry(expiry)
                .or_insert_with(|| strike_grid(spec, spot));
            let tau = (expiry - t).num_seconds() as f64 / SECONDS_PER_YEAR;
            for &k in strikes.iter() {
                let (value, delta) = black_scholes_call(spot, k, iv, tau);
                out.push(OptionQuote {
                    quote_time: t,
                    strike: k,
                    expiry,
                    option_price: value / spot,
                    index_price: spot,
                    implied_vol: iv,
                    delta: delta.clamp(0.0, 1.0),
                });
            }
        }
        t += cadence;
    }
    Ok(out)
}

fn quote_iv(
    spec: &OptionChainSpec,
    realized: &Option<(TimeDelta, BTreeMap<Timestamp, f64>)>,
    t: Timestamp,
) -> Option<f64> {
    match (spec.iv, realized) {
        (IvSource::Fixed(v), _) => Some(v),
        (_, Some((w, vols))) => vols.get(&floor_to(t, *w)).copied().filter(|v| *v > 0.0),
        _ => None,
    }
}

fn strike_grid(spec: &OptionChainSpec, spot: f64) -> Vec<f64> {
    let mut ks: Vec<f64> = (spec.strike_lo..=spec.strike_hi)
        .map(|j| {
            ((spot * (1.0 + j as f64 * spec.strike_step)) / spec.strike_tick).round()
                * spec.strike_tick
        })
        .filter(|k| *k > 0.0)
        .collect();
    ks.dedup();
    ks
}
