//! The horizon × model × pair × target regression grid and its heatmap renderings.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use chrono::TimeDelta;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ols::{ols_fit_with, OlsOptions};
use super::significance::{significance, Stars};
use super::RegressError;
use crate::ingest::{BarSeries, FlowRecord};
use crate::numfmt::{fmt17, to_json_17};
use crate::series::{
    align, net_inflows, realized_vol, returns, HorizonSeries, NetInflowSeries, SeriesError,
};
use crate::time::{format_duration, hours, minutes, parse_duration};
use crate::Asset;

pub const INTRADAY_HORIZONS: [i64; 5] = [1, 2, 3, 4, 6];
pub const DAILY_WEEKLY_HORIZONS: [i64; 2] = [24, 168];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pair {
    pub predictor: Asset,
    pub response: Asset,
}

impl Pair {
    pub const fn new(predictor: Asset, response: Asset) -> Self {
        Self {
            predictor,
            response,
        }
    }

    /// USDT→ETH, ETH→ETH, USDT→BTC, BTC→BTC.
    pub const STANDARD: [Pair; 4] = [
        Pair::new(Asset::Usdt, Asset::Eth),
        Pair::new(Asset::Eth, Asset::Eth),
        Pair::new(Asset::Usdt, Asset::Btc),
        Pair::new(Asset::Btc, Asset::Btc),
    ];

    pub fn label(&self) -> String {
        format!("{}>{}", self.predictor, self.response)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Return,
    Volatility,
}

impl Target {
    pub fn as_str(self) -> &'static str {
        match self {
            Target::Return => "return",
            Target::Volatility => "volatility",
        }
    }
}

/// Single: net inflow only. Double: adds the time-t value of the response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Single,
    Double,
}

impl Model {
    pub fn as_str(self) -> &'static str {
        match self {
            Model::Single => "single",
            Model::Double => "double",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Positive,
    Negative,
    Insignificant,
}

/// Why a grid cell could not be estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellError {
    MissingData,
    EmptyInput,
    FrequencyMismatch,
    InsufficientSubBars,
    HorizonMismatch,
    EmptyAlignment,
    TooFewObservations,
    RankDeficient,
    InvalidSplit,
}

impl CellError {
    pub fn as_str(self) -> &'static str {
        match self {
            CellError::MissingData => "MissingData",
            CellError::EmptyInput => "EmptyInput",
            CellError::FrequencyMismatch => "FrequencyMismatch",
            CellError::InsufficientSubBars => "InsufficientSubBars",
            CellError::HorizonMismatch => "HorizonMismatch",
            CellError::EmptyAlignment => "EmptyAlignment",
            CellError::TooFewObservations => "TooFewObservations",
            CellError::RankDeficient => "RankDeficient",
            CellError::InvalidSplit => "InvalidSplit",
        }
    }
}

impl From<&SeriesError> for CellError {
    fn from(e: &SeriesError) -> Self {
        match e {
            SeriesError::EmptyInput(_) => CellError::EmptyInput,
            SeriesError::FrequencyMismatch { .. } => CellError::FrequencyMismatch,
            SeriesError::InsufficientSubBars { .. } => CellError::InsufficientSubBars,
            SeriesError::HorizonMismatch { .. } => CellError::HorizonMismatch,
            SeriesError::EmptyAlignment => CellError::EmptyAlignment,
        }
    }
}

impl From<&RegressError> for CellError {
    fn from(e: &RegressError) -> Self {
        match e {
            RegressError::RankDeficient { .. } => CellError::RankDeficient,
            RegressError::TooFewObservations { .. } => CellError::TooFewObservations,
            RegressError::InvalidSplit(_) => CellError::InvalidSplit,
            RegressError::Series(s) => s.into(),
        }
    }
}

mod horizon_label {
    use super::*;
    use serde::{de::Error, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &TimeDelta, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_duration(*d))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<TimeDelta, D::Error> {
        let s = String::deserialize(d)?;
        parse_duration(&s).ok_or_else(|| D::Error::custom(format!("bad horizon {s:?}")))
    }
}

/// One heatmap entry. A failed cell has `beta1 = null` and an `error` code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapCell {
    pub pair: Pair,
    pub target: Target,
    #[serde(with = "horizon_label")]
    pub horizon: TimeDelta,
    pub model: Model,
    pub beta1: Option<f64>,
    pub stars: Stars,
    pub sign: Sign,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<CellError>,
}

impl HeatmapCell {
    fn failed(
        pair: Pair,
        target: Target,
        horizon: TimeDelta,
        model: Model,
        error: CellError,
    ) -> Self {
        Self {
            pair,
            target,
            horizon,
            model,
            beta1: None,
            stars: Stars::None,
            sign: Sign::Insignificant,
            error: Some(error),
        }
    }

    /// Heatmap text: coefficient followed by its stars, or the error code.
    pub fn label(&self) -> String {
        match (self.beta1, self.error) {
            (_, Some(e)) => e.as_str().to_string(),
            (Some(b), None) => format!("{}{}", fmt17(b), self.stars.as_str()),
            (None, None) => "N/A".to_string(),
        }
    }
}

/// Hourly flows for every predictor asset and price bars per response asset.
#[derive(Debug, Clone, Default)]
pub struct GridData {
    pub flows: Vec<FlowRecord>,
    pub bars: BTreeMap<Asset, BarSeries>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub horizons: Vec<TimeDelta>,
    pub pairs: Vec<Pair>,
    pub targets: Vec<Target>,
    pub models: Vec<Model>,
    /// Sub-bar spacing for realized volatility.
    pub sub_frequency: TimeDelta,
    /// Cells with fewer aligned rows are marked `TooFewObservations`.
    pub min_obs: usize,
    pub ols: OlsOptions,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            horizons: INTRADAY_HORIZONS.iter().map(|&h| hours(h)).collect(),
            pairs: Pair::STANDARD.to_vec(),
            targets: vec![Target::Return, Target::Volatility],
            models: vec![Model::Single, Model::Double],
            sub_frequency: minutes(5),
            min_obs: 30,
            ols: OlsOptions::default(),
        }
    }
}

impl GridSpec {
    pub fn cell_count(&self) -> usize {
        self.horizons.len() * self.pairs.len() * self.targets.len() * self.models.len()
    }
}

enum Response {
    Return(crate::series::ReturnSeries),
    Vol(crate::series::VolSeries),
}

impl Response {
    fn as_series(&self) -> &dyn HorizonSeries {
        match self {
            Response::Return(s) => s,
            Response::Vol(s) => s,
        }
    }
}

/// Estimates every (pair, target, horizon, model) cell.
///
/// Cells come back in nested pair → target → horizon → model order regardless
/// of how the work was scheduled. Failures are recorded per cell.
pub fn run_grid(data: &GridData, spec: &GridSpec) -> Vec<HeatmapCell> {
    let mut flow_keys: Vec<(Asset, TimeDelta)> = Vec::new();
    let mut resp_keys: Vec<(Asset, Target, TimeDelta)> = Vec::new();
    for p in &spec.pairs {
        for &h in &spec.horizons {
            if !flow_keys.contains(&(p.predictor, h)) {
                flow_keys.push((p.predictor, h));
            }
            for &t in &spec.targets {
                if !resp_keys.contains(&(p.response, t, h)) {
                    resp_keys.push((p.response, t, h));
                }
            }
        }
    }

    let flows: HashMap<(Asset, TimeDelta), Result<NetInflowSeries, SeriesError>> = flow_keys
        .par_iter()
        .map(|&(a, h)| ((a, h), net_inflows(&data.flows, a, h)))
        .collect();
    let resps: HashMap<(Asset, Target, TimeDelta), Result<Response, CellError>> = resp_keys
        .par_iter()
        .map(|&(a, t, h)| {
            let r = match data.bars.get(&a) {
                None => Err(CellError::MissingData),
                Some(b) => match t {
                    Target::Return => returns(b, h).map(Response::Return),
                    Target::Volatility => realized_vol(b, h, spec.sub_frequency).map(Response::Vol),
                }
                .map_err(|e| CellError::from(&e)),
            };
            ((a, t, h), r)
        })
        .collect();

    let mut keys = Vec::with_capacity(spec.cell_count());
    for &p in &spec.pairs {
        for &t in &spec.targets {
            for &h in &spec.horizons {
                for &m in &spec.models {
                    keys.push((p, t, h, m));
                }
            }
        }
    }
    keys.par_iter()
        .map(|&(pair, target, horizon, model)| {
            let fail = |e| HeatmapCell::failed(pair, target, horizon, model, e);
            let predictor = match &flows[&(pair.predictor, horizon)] {
                Ok(s) => s,
                Err(e) => return fail(e.into()),
            };
            let response = match &resps[&(pair.response, target, horizon)] {
                Ok(r) => r.as_series(),
                Err(e) => return fail(*e),
            };
            let control = (model == Model::Double).then_some(response);
            let sample = match align(predictor, response, control, horizon) {
                Ok(s) => s,
                Err(e) => return fail((&e).into()),
            };
            let k = if model == Model::Double { 2 } else { 1 };
            if sample.n() < spec.min_obs.max(k + 2) {
                return fail(CellError::TooFewObservations);
            }
            match ols_fit_with(&sample, &spec.ols) {
                Ok(fit) => {
                    let beta1 = fit.beta[1];
                    let stars = significance(fit.t_stat[1], fit.n, fit.k());
                    let sign = match (stars.is_significant(), beta1 > 0.0) {
                        (false, _) => Sign::Insignificant,
                        (true, true) => Sign::Positive,
                        (true, false) => Sign::Negative,
                    };
                    HeatmapCell {
                        pair,
                        target,
                        horizon,
                        model,
                        beta1: Some(beta1),
                        stars,
                        sign,
                        error: None,
                    }
                }
                Err(e) => fail((&e).into()),
            }
        })
        .collect()
}

/// The grid at daily and weekly horizons.
pub fn daily_weekly_grid(data: &GridData, spec: &GridSpec) -> Vec<HeatmapCell> {
    let spec = GridSpec {
        horizons: DAILY_WEEKLY_HORIZONS.iter().map(|&h| hours(h)).collect(),
        ..spec.clone()
    };
    run_grid(data, &spec)
}

/// JSON array of cells, floats at 17 significant digits.
pub fn grid_to_json(cells: &[HeatmapCell]) -> String {
    to_json_17(cells).expect("cells serialize")
}

/// Table layout: one row per horizon × model, one column per pair × target.
pub fn grid_to_tsv(cells: &[HeatmapCell]) -> String {
    let mut horizons: Vec<TimeDelta> = Vec::new();
    let mut models: Vec<Model> = Vec::new();
    let mut columns: Vec<(Pair, Target)> = Vec::new();
    let mut lookup = HashMap::new();
    for c in cells {
        if !horizons.contains(&c.horizon) {
            horizons.push(c.horizon);
        }
        if !models.contains(&c.model) {
            models.push(c.model);
        }
        if !columns.contains(&(c.pair, c.target)) {
            columns.push((c.pair, c.target));
        }
        lookup.insert((c.pair, c.target, c.horizon, c.model), c);
    }
    horizons.sort();
    models.sort();

    let mut out = String::from("horizon\tmodel");
    for (p, t) in &columns {
        let _ = write!(out, "\t{} {}", p.label(), t.as_str());
    }
    out.push('\n');
    for &h in &horizons {
        for &m in &models {
            let _ = write!(out, "{}\t{}", format_duration(h), m.as_str());
            for &(p, t) in &columns {
                let text = lookup
                    .get(&(p, t, h, m))
                    .map(|c| c.label())
                    .unwrap_or_default();
                let _ = write!(out, "\t{text}");
            }
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_has_eighty_cells() {
        assert_eq!(GridSpec::default().cell_count(), 80);
    }

    #[test]
    fn cell_json_shape() {
        let c = HeatmapCell {
            pair: Pair::new(Asset::Eth, Asset::Eth),
            target: Target::Return,
            horizon: hours(1),
            model: Model::Single,
            beta1: Some(-0.017),
            stars: Stars::Three,
            sign: Sign::Negative,
            error: None,
        };
        let s = grid_to_json(std::slice::from_ref(&c));
        assert_eq!(
            s,
            r#"[{"pair":{"predictor":"ETH","response":"ETH"},"target":"return","horizon":"1h","model":"single","beta1":-1.7000000000000001e-2,"stars":"***","sign":"negative"}]"#
        );
        let back: Vec<HeatmapCell> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![c]);
    }

    #[test]
    fn missing_bars_mark_cells() {
        let spec = GridSpec {
            horizons: vec![hours(1)],
            ..GridSpec::default()
        };
        let cells = run_grid(&GridData::default(), &spec);
        assert_eq!(cells.len(), 16);
        assert!(cells
            .iter()
            .all(|c| c.error.is_some() && c.sign == Sign::Insignificant));
    }
}
