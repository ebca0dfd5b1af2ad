use flowcast_core::events::{
    detect_extremes, extract_window, threshold_percentile, Direction, EventsError,
};
use flowcast_core::ingest::{Bar, BarSeries, OptionQuote};
use flowcast_core::options::{
    breakeven_slippage, bucket_stats, net_pnl, trade_with_costs, BucketFilter, CostParams,
    IvFilter, OtmRange, Side, WtlMode,
};
use flowcast_core::series::NetInflowSeries;
use flowcast_core::time::{hours, minutes, parse_utc, Timestamp};
use flowcast_core::Asset;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn year_series(seed: u64, year: i32) -> NetInflowSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = parse_utc(&format!("{year}-01-01T00:00:00Z")).unwrap();
    let n = if year % 4 == 0 { 8784 } else { 8760 };
    NetInflowSeries {
        asset: Asset::Eth,
        horizon: hours(1),
        points: (0..n)
            .map(|i| (start + hours(i), rng.random_range(-100.0..100.0)))
            .collect(),
    }
}

#[test]
fn top_k_equals_sort_oracle() {
    for seed in 0..5 {
        let s = year_series(seed, 2021);
        let hits = detect_extremes(&s, 10, &[2021], Direction::Inflow).unwrap();
        let mut sorted = s.points.clone();
        sorted.sort_by(|a, b| b.1.total_cmp(&a.1));
        let oracle: Vec<Timestamp> = sorted[..10].iter().map(|p| p.0).collect();
        let got: Vec<Timestamp> = hits.iter().map(|h| h.timestamp).collect();
        assert_eq!(got, oracle);
        assert_eq!(
            hits.iter().map(|h| h.rank_in_year).collect::<Vec<_>>(),
            (1..=10).collect::<Vec<_>>()
        );
    }
    assert!((threshold_percentile(10, 8760) - 0.998_858_447_488_584_5).abs() < 1e-15);
    assert_eq!(
        format!("{:.2}%", threshold_percentile(10, 8760) * 100.0),
        "99.89%"
    );
}

#[test]
fn outflow_direction_and_ties() {
    let t = parse_utc("2022-01-01T00:00:00Z").unwrap();
    let s = NetInflowSeries {
        asset: Asset::Btc,
        horizon: hours(1),
        points: vec![
            (t, -5.0),
            (t + hours(1), 3.0),
            (t + hours(2), -5.0),
            (t + hours(3), -1.0),
        ],
    };
    let out = detect_extremes(&s, 2, &[2022], Direction::Outflow).unwrap();
    assert_eq!(
        out.iter().map(|h| h.timestamp).collect::<Vec<_>>(),
        vec![t, t + hours(2)]
    );
    assert_eq!(
        detect_extremes(&s, 0, &[2022], Direction::Inflow),
        Err(EventsError::InvalidK)
    );
    assert_eq!(
        detect_extremes(&s, 1, &[2023], Direction::Inflow),
        Err(EventsError::EmptyYear(2023))
    );
}

#[test]
fn window_covers_pre_and_post() {
    let s = year_series(1, 2022);
    let start = s.points[0].0;
    let bars: Vec<Bar> = (0..200)
        .map(|i| Bar {
            timestamp: start + minutes(5 * i),
            open: 1.0,
            high: 1.0,
            low: 1.0,
            close: 1.0 + i as f64,
        })
        .collect();
    let bars = BarSeries::from_sorted(minutes(5), bars);
    let hits = detect_extremes(&s, 1, &[2022], Direction::Inflow).unwrap();
    let mut ev = hits[0];
    ev.timestamp = start + hours(5);
    let w = extract_window(&ev, &s, &bars, hours(3), hours(2)).unwrap();
    assert_eq!(w.flow_track.len(), 6);
    assert_eq!(w.price_track[0], (start + hours(2), 1.0 + 24.0));
    ev.timestamp = start + hours(1);
    assert!(matches!(
        extract_window(&ev, &s, &bars, hours(3), hours(2)),
        Err(EventsError::InsufficientCoverage { .. })
    ));
}

fn quote(t: Timestamp, price: f64, index: f64, strike: f64, iv: f64, delta: f64) -> OptionQuote {
    OptionQuote {
        quote_time: t,
        strike,
        expiry: parse_utc("2022-05-20T08:00:00Z").unwrap(),
        option_price: price,
        index_price: index,
        implied_vol: iv,
        delta,
    }
}

fn arb_trade() -> impl Strategy<Value = (f64, f64, f64, f64, f64, f64, f64, bool)> {
    (
        1e-4f64..0.2,
        0.0f64..0.3,
        100.0f64..100_000.0,
        0.8f64..1.2,
        0.9f64..1.2,
        0.0f64..3.0,
        0.0f64..1.0,
        any::<bool>(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn sides_are_antisymmetric_before_costs((p0, p1, s0, s_ratio, k_ratio, iv, delta, _) in arb_trade()) {
        let t = parse_utc("2022-05-12T00:00:00Z").unwrap();
        let a = quote(t, p0, s0, s0 * k_ratio, iv, delta);
        let b = quote(t + hours(1), p1, s0 * s_ratio, s0 * k_ratio, iv, delta);
        let sell = trade_with_costs(&a, &b, Side::SellCall, delta, &CostParams::ZERO).unwrap();
        let buy = trade_with_costs(&a, &b, Side::BuyCall, delta, &CostParams::ZERO).unwrap();
        prop_assert_eq!(sell.r_option, -buy.r_option);
        prop_assert_eq!(sell.pnl_portfolio, -buy.pnl_portfolio);
        prop_assert_eq!(sell.r_portfolio, sell.r_option + sell.r_underlying);
        prop_assert_eq!(sell.pnl_portfolio, sell.pnl_option + sell.pnl_underlying);
    }

    #[test]
    fn breakeven_zeroes_net_pnl((p0, p1, s0, s_ratio, k_ratio, iv, delta, buy) in arb_trade()) {
        let t = parse_utc("2022-05-12T00:00:00Z").unwrap();
        let a = quote(t, p0, s0, s0 * k_ratio, iv, delta);
        let b = quote(t + hours(1), p1, s0 * s_ratio, s0 * k_ratio, iv, delta);
        let side = if buy { Side::BuyCall } else { Side::SellCall };
        let tr = trade_with_costs(&a, &b, side, delta, &CostParams::default()).unwrap();
        let s = breakeven_slippage(&tr, &CostParams::default());
        let at = CostParams { slippage: s, ..CostParams::default() };
        prop_assert!(net_pnl(&tr, &at).abs() <= 1e-10 * s0);
    }

    #[test]
    fn otm_buckets_partition_their_union(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = parse_utc("2022-05-12T00:00:00Z").unwrap();
        let trades: Vec<_> = (0..50)
            .map(|_| {
                let s0 = 2000.0;
                let k = s0 * (1.0 + rng.random_range(-0.05..0.15));
                let a = quote(t, rng.random_range(0.001..0.05), s0, k, rng.random_range(0.3..3.0), 0.3);
                let b = quote(t + hours(1), rng.random_range(0.0..0.05), s0 * rng.random_range(0.98..1.02), k, 1.0, 0.3);
                trade_with_costs(&a, &b, Side::SellCall, 0.3, &CostParams::default()).unwrap()
            })
            .collect();
        let edges = [None, Some(0.01), Some(0.03), Some(0.05), Some(0.10)];
        let parts: usize = edges
            .windows(2)
            .map(|w| bucket_stats(&trades, &BucketFilter { iv: None, otm: Some(OtmRange::new(w[0], w[1])) }, WtlMode::Count).total_trades)
            .sum();
        let union = bucket_stats(&trades, &BucketFilter { iv: None, otm: Some(OtmRange::new(None, Some(0.10))) }, WtlMode::Count);
        prop_assert_eq!(parts, union.total_trades);

        let iv = BucketFilter { iv: Some(IvFilter::AtLeast(1.0)), otm: None };
        let mut reversed = trades.clone();
        reversed.reverse();
        let a = bucket_stats(&trades, &iv, WtlMode::Count);
        let b = bucket_stats(&reversed, &iv, WtlMode::Count);
        prop_assert_eq!((a.total_trades, a.wins, a.win_rate, a.wtl), (b.total_trades, b.wins, b.win_rate, b.wtl));
        prop_assert!((a.r_total_net - b.r_total_net).abs() < 1e-12);
    }
}
