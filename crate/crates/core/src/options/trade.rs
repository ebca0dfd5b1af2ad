//! Per-trade accounting for delta-hedged call positions.

use serde::{Deserialize, Serialize};

use super::OptionsError;
use crate::ingest::OptionQuote;

/// Execution costs, each a fraction of the entry index price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    /// Option premium fee.
    pub premium_rate: f64,
    /// Perpetual hedge fee per unit of delta.
    pub hedge_rate: f64,
    /// Half the bid-ask spread.
    pub half_spread: f64,
    pub slippage: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        Self {
            premium_rate: 0.0003,
            hedge_rate: 0.0005,
            half_spread: 0.001 / 2.0,
            slippage: 0.0,
        }
    }
}

impl CostParams {
    pub const ZERO: CostParams = CostParams {
        premium_rate: 0.0,
        hedge_rate: 0.0,
        half_spread: 0.0,
        slippage: 0.0,
    };

    pub fn is_valid(&self) -> bool {
        [
            self.premium_rate,
            self.hedge_rate,
            self.half_spread,
            self.slippage,
        ]
        .iter()
        .all(|v| v.is_finite() && *v >= 0.0)
    }

    /// Total cost as a fraction of index price for a hedge of size `delta`.
    pub fn rate(&self, delta: f64) -> f64 {
        self.premium_rate + self.hedge_rate * delta + self.half_spread + self.slippage
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    SellCall,
    BuyCall,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::SellCall => "sell_call",
            Side::BuyCall => "buy_call",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeOutcome {
    pub entry: OptionQuote,
    pub exit: OptionQuote,
    pub side: Side,
    pub delta_hedge: f64,
    pub pnl_option: f64,
    pub pnl_underlying: f64,
    pub pnl_portfolio: f64,
    pub pnl_net: f64,
    pub r_option: f64,
    pub r_underlying: f64,
    pub r_portfolio: f64,
    pub r_portfolio_net: f64,
    pub win: bool,
}

/// Call price in USD: option price (in underlying units) times index price.
pub fn call_price(q: &OptionQuote) -> f64 {
    q.option_price * q.index_price
}

/// Signed moneyness `(strike - index) / index`; positive for out-of-the-money calls.
pub fn otm_range(strike: f64, index: f64) -> f64 {
    (strike - index) / index
}

/// Capital backing one contract plus its hedge: `(0.3 + delta) * index`.
pub fn initial_capital(delta: f64, index: f64) -> f64 {
    (0.3 + delta) * index
}

/// Opens at `entry`, closes at `exit`, hedging with `delta_hedge` units of the
/// underlying, under the default cost model.
pub fn trade(
    entry: &OptionQuote,
    exit: &OptionQuote,
    side: Side,
    delta_hedge: f64,
) -> Result<TradeOutcome, OptionsError> {
    trade_with_costs(entry, exit, side, delta_hedge, &CostParams::default())
}

/// Option leg: the sell-call return is `(C_entry - C_exit) / C_entry` and the
/// buy-call return its negation. Hedge leg: the seller holds `delta_hedge`
/// units long, so its return is `delta_hedge * r_buy` and its PnL
/// `(S_exit - S_entry) * delta_hedge`; a buyer holds the mirror position.
pub fn trade_with_costs(
    entry: &OptionQuote,
    exit: &OptionQuote,
    side: Side,
    delta_hedge: f64,
    costs: &CostParams,
) -> Result<TradeOutcome, OptionsError> {
    if !entry.same_instrument(exit) {
        return Err(OptionsError::InstrumentMismatch);
    }
    if exit.quote_time < entry.quote_time {
        return Err(OptionsError::ExitBeforeEntry);
    }
    let c0 = call_price(entry);
    if c0 <= 0.0 {
        return Err(OptionsError::ZeroEntryPrice);
    }
    let c1 = call_price(exit);
    let sell_pnl = c0 - c1;
    let r_sell = sell_pnl / c0;
    let r_buy = -r_sell;
    let hedge_pnl = (exit.index_price - entry.index_price) * delta_hedge;

    let (pnl_option, r_option, pnl_underlying, r_underlying) = match side {
        Side::SellCall => (sell_pnl, r_sell, hedge_pnl, delta_hedge * r_buy),
        Side::BuyCall => (-sell_pnl, r_buy, -hedge_pnl, delta_hedge * r_sell),
    };
    let mut t = TradeOutcome {
        entry: *entry,
        exit: *exit,
        side,
        delta_hedge,
        pnl_option,
        pnl_underlying,
        pnl_portfolio: pnl_option + pnl_underlying,
        pnl_net: 0.0,
        r_option,
        r_underlying,
        r_portfolio: r_option + r_underlying,
        r_portfolio_net: 0.0,
        win: false,
    };
    t.apply_costs(costs);
    Ok(t)
}

impl TradeOutcome {
    /// Recomputes the net fields under `costs`.
    pub fn apply_costs(&mut self, costs: &CostParams) {
        self.pnl_net = net_pnl(self, costs);
        self.r_portfolio_net =
            self.pnl_net / initial_capital(self.delta_hedge, self.entry.index_price);
        self.win = self.r_portfolio_net > 0.0;
    }
}

/// `pnl_portfolio - (premium + hedge * delta + half_spread + slippage) * index_entry`.
pub fn net_pnl(t: &TradeOutcome, c: &CostParams) -> f64 {
    t.pnl_portfolio - c.rate(t.delta_hedge) * t.entry.index_price
}

/// Slippage at which the trade's net PnL is exactly zero.
pub fn breakeven_slippage(t: &TradeOutcome, c: &CostParams) -> f64 {
    t.pnl_portfolio / t.entry.index_price
        - (c.premium_rate + c.hedge_rate * t.delta_hedge + c.half_spread)
}
