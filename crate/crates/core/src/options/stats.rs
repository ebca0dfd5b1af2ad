//! Bucket filters (IV, moneyness) and win/loss aggregation.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::trade::{otm_range, TradeOutcome};

/// Implied-volatility filter on the entry quote. `AtLeast` is closed at the
/// threshold, `Below` is open.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IvFilter {
    AtLeast(f64),
    Below(f64),
}

impl IvFilter {
    pub fn admits(&self, iv: f64) -> bool {
        match *self {
            IvFilter::AtLeast(x) => iv >= x,
            IvFilter::Below(x) => iv < x,
        }
    }
}

/// Half-open moneyness interval `[lo, hi)`; a missing bound is unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OtmRange {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

impl OtmRange {
    pub const fn new(lo: Option<f64>, hi: Option<f64>) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo.is_none_or(|lo| x >= lo) && self.hi.is_none_or(|hi| x < hi)
    }
}

/// Conjunction of optional IV and moneyness filters. Both `None` keeps every trade.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BucketFilter {
    pub iv: Option<IvFilter>,
    pub otm: Option<OtmRange>,
}

fn pct(x: f64) -> String {
    // Round to basis points so 0.03 prints as 3%, not 3.0000000000000004%.
    format!("{}%", (x * 10_000.0).round() / 100.0)
}

impl BucketFilter {
    pub fn admits(&self, t: &TradeOutcome) -> bool {
        self.iv.is_none_or(|f| f.admits(t.entry.implied_vol))
            && self
                .otm
                .is_none_or(|r| r.contains(otm_range(t.entry.strike, t.entry.index_price)))
    }

    /// Row label such as `Original`, `IV>=1` or `IV>=2, 1%<=OTM<3%`.
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        match self.iv {
            Some(IvFilter::AtLeast(x)) => parts.push(format!("IV>={x}")),
            Some(IvFilter::Below(x)) => parts.push(format!("IV<{x}")),
            None => {}
        }
        if let Some(r) = self.otm {
            let mut s = String::new();
            if let Some(lo) = r.lo {
                let _ = write!(s, "{}<=", pct(lo));
            }
            s.push_str("OTM");
            if let Some(hi) = r.hi {
                let _ = write!(s, "<{}", pct(hi));
            }
            parts.push(s);
        }
        if parts.is_empty() {
            "Original".to_string()
        } else {
            parts.join(", ")
        }
    }

    /// The fifteen row filters of the standard profitability table.
    pub fn standard_rows() -> Vec<BucketFilter> {
        let otm = [
            OtmRange::new(None, Some(0.01)),
            OtmRange::new(Some(0.01), Some(0.03)),
            OtmRange::new(Some(0.03), Some(0.05)),
            OtmRange::new(Some(0.05), Some(0.10)),
        ];
        let mut rows = vec![
            BucketFilter::default(),
            BucketFilter {
                iv: Some(IvFilter::AtLeast(1.0)),
                otm: None,
            },
            BucketFilter {
                iv: Some(IvFilter::AtLeast(2.0)),
                otm: None,
            },
        ];
        rows.extend(otm.iter().map(|&r| BucketFilter {
            iv: None,
            otm: Some(r),
        }));
        for level in [1.0, 2.0] {
            rows.extend(otm.iter().map(|&r| BucketFilter {
                iv: Some(IvFilter::AtLeast(level)),
                otm: Some(r),
            }));
        }
        rows
    }
}

/// How the win-to-loss ratio is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WtlMode {
    /// Winning trade count over losing trade count.
    #[default]
    Count,
    /// Sum of winning net PnL over the magnitude of summed losing net PnL.
    PnlRatio,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BucketStats {
    pub total_trades: usize,
    pub wins: usize,
    pub losses: usize,
    /// `None` for an empty bucket.
    pub win_rate: Option<f64>,
    /// `None` when there are no losses.
    pub wtl: Option<f64>,
    pub r_avg_net: Option<f64>,
    pub r_total_net: f64,
}

/// Aggregates the trades admitted by `filter`.
pub fn bucket_stats(trades: &[TradeOutcome], filter: &BucketFilter, mode: WtlMode) -> BucketStats {
    let kept: Vec<&TradeOutcome> = trades.iter().filter(|t| filter.admits(t)).collect();
    let total = kept.len();
    let wins = kept.iter().filter(|t| t.win).count();
    let losses = total - wins;
    let r_total_net = kept.iter().fold(0.0, |acc, t| acc + t.r_portfolio_net);
    let wtl = match mode {
        WtlMode::Count => (losses > 0).then(|| wins as f64 / losses as f64),
        WtlMode::PnlRatio => {
            let won: f64 = kept.iter().filter(|t| t.win).map(|t| t.pnl_net).sum();
            let lost: f64 = kept.iter().filter(|t| !t.win).map(|t| t.pnl_net).sum();
            (losses > 0 && lost != 0.0).then(|| won / lost.abs())
        }
    };
    BucketStats {
        total_trades: total,
        wins,
        losses,
        win_rate: (total > 0).then(|| wins as f64 / total as f64),
        wtl,
        r_avg_net: (total > 0).then(|| r_total_net / total as f64),
        r_total_net,
    }
}
