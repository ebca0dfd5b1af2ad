use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn flowcast(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flowcast"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let out = flowcast(args, cwd);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn heatmap_data(dir: &Path) {
    ok(
        &[
            "synth", "--preset", "heatmap", "--seed", "3", "--hours", "1500", "--out", "data",
        ],
        dir,
    );
}

const REGRESS: [&str; 7] = [
    "regress",
    "--flows",
    "data/flows.csv",
    "--bars",
    "ETH=data/bars_ETH.csv",
    "--bars",
    "BTC=data/bars_BTC.csv",
];

#[test]
fn heatmap_json_has_eighty_well_formed_cells() {
    let tmp = tempfile::tempdir().unwrap();
    heatmap_data(tmp.path());
    let mut args = REGRESS.to_vec();
    args.extend(["--out", "res"]);
    ok(&args, tmp.path());

    let cells: Vec<Value> =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("res/heatmap.json")).unwrap())
            .unwrap();
    assert_eq!(cells.len(), 80);
    for c in &cells {
        let o = c.as_object().unwrap();
        for key in [
            "pair", "target", "horizon", "model", "beta1", "stars", "sign",
        ] {
            assert!(o.contains_key(key), "missing {key} in {c}");
        }
        assert!(["return", "volatility"].contains(&o["target"].as_str().unwrap()));
        assert!(["1h", "2h", "3h", "4h", "6h"].contains(&o["horizon"].as_str().unwrap()));
        assert!(o["beta1"].is_f64() || (o["beta1"].is_null() && o.contains_key("error")));
    }
    let tsv = fs::read_to_string(tmp.path().join("res/heatmap.tsv")).unwrap();
    assert_eq!(tsv.lines().count(), 1 + 5 * 2);
}

#[test]
fn horizon_subset_gives_thirty_two_cells() {
    let tmp = tempfile::tempdir().unwrap();
    heatmap_data(tmp.path());
    let mut args = REGRESS.to_vec();
    args.extend(["--horizons", "1,6", "--out", "res"]);
    let stdout = ok(&args, tmp.path());
    assert!(stdout.contains("cells=32"), "{stdout}");
    let cells: Vec<Value> =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("res/heatmap.json")).unwrap())
            .unwrap();
    assert_eq!(cells.len(), 32);
}

#[test]
fn missing_bars_file_exits_two_naming_the_path() {
    let tmp = tempfile::tempdir().unwrap();
    heatmap_data(tmp.path());
    let out = flowcast(
        &[
            "regress",
            "--flows",
            "data/flows.csv",
            "--bars",
            "ETH=data/absent.csv",
        ],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("data/absent.csv"));
}

#[test]
fn malformed_flows_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("flows.csv"),
        "timestamp,asset,inflow_usd,outflow_usd\nnot-a-time,ETH,1,2\n",
    )
    .unwrap();
    let out = flowcast(&["ingest-check", "--flows", "flows.csv"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_supplies_inputs_and_flags_override() {
    let tmp = tempfile::tempdir().unwrap();
    heatmap_data(tmp.path());
    fs::write(
        tmp.path().join("flowcast.toml"),
        "[inputs]\nflows = \"data/flows.csv\"\nbars = [\"ETH=data/bars_ETH.csv\", \"BTC=data/bars_BTC.csv\"]\n\n\
         [regress]\nhorizons = [\"1\", \"2\"]\nout = \"cfg\"\n",
    )
    .unwrap();
    let s = ok(&["--config", "flowcast.toml", "regress"], tmp.path());
    assert!(s.contains("cells=32"), "{s}");
    let s = ok(
        &["--config", "flowcast.toml", "regress", "--horizons", "3"],
        tmp.path(),
    );
    assert!(s.contains("cells=16"), "{s}");
}

#[test]
fn events_writes_k_rows_and_windows() {
    let tmp = tempfile::tempdir().unwrap();
    ok(
        &[
            "synth", "--preset", "null", "--seed", "5", "--hours", "2000", "--out", "data",
        ],
        tmp.path(),
    );
    let stdout = ok(
        &[
            "events",
            "--flows",
            "data/flows.csv",
            "--bars",
            "ETH=data/bars_ETH.csv",
            "--k",
            "10",
            "--pre",
            "6",
            "--post",
            "6",
            "--out",
            "ev",
        ],
        tmp.path(),
    );
    assert!(stdout.starts_with("2022\thours=2000\thits=10"), "{stdout}");
    let csv = fs::read_to_string(tmp.path().join("ev/events.csv")).unwrap();
    assert_eq!(csv.lines().count(), 11);
    let windows = fs::read_dir(tmp.path().join("ev/windows")).unwrap().count();
    assert!(
        windows >= 16 && windows.is_multiple_of(2),
        "{windows} window files"
    );
}

fn win_rate(tsv: &str, prefix: &str) -> f64 {
    let line = tsv.lines().find(|l| l.starts_with(prefix)).unwrap();
    line.split('\t').nth(1).unwrap().parse().unwrap()
}

#[test]
fn backtest_top_leg_beats_bottom_leg() {
    let tmp = tempfile::tempdir().unwrap();
    ok(
        &[
            "synth", "--preset", "backtest", "--seed", "1", "--hours", "720", "--out", "data",
        ],
        tmp.path(),
    );
    ok(
        &[
            "backtest",
            "--flows",
            "data/flows.csv",
            "--options",
            "data/options.csv",
            "--out",
            "bt",
        ],
        tmp.path(),
    );
    let tsv = fs::read_to_string(tmp.path().join("bt/backtest.tsv")).unwrap();
    assert_eq!(
        tsv.lines().next().unwrap(),
        "bucket\twin_rate\ttotal_trades\twtl\tr_avg_net\tr_total_net"
    );
    assert_eq!(tsv.lines().count(), 1 + 2 * 15);
    let top = win_rate(&tsv, "top 10% sell_call | Original");
    let bottom = win_rate(&tsv, "bottom 10% sell_call | Original");
    assert!(top > bottom, "top {top} bottom {bottom}");
    let trades = fs::read_to_string(tmp.path().join("bt/trades.csv")).unwrap();
    assert!(trades.lines().count() > 1);
}

#[test]
fn backtest_without_quotes_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    ok(
        &[
            "synth", "--preset", "backtest", "--seed", "1", "--hours", "200", "--out", "data",
        ],
        tmp.path(),
    );
    let header = fs::read_to_string(tmp.path().join("data/options.csv")).unwrap();
    let header = header.lines().next().unwrap().to_string() + "\n";
    fs::write(tmp.path().join("empty.csv"), header).unwrap();
    let out = flowcast(
        &[
            "backtest",
            "--flows",
            "data/flows.csv",
            "--options",
            "empty.csv",
            "--out",
            "bt",
        ],
        tmp.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn synth_is_deterministic_per_seed() {
    let tmp = tempfile::tempdir().unwrap();
    for dir in ["a", "b"] {
        ok(
            &[
                "synth",
                "--seed",
                "42",
                "--hours",
                "300",
                "--with-options",
                "--out",
                dir,
            ],
            tmp.path(),
        );
    }
    ok(
        &["synth", "--seed", "43", "--hours", "300", "--out", "c"],
        tmp.path(),
    );
    for f in ["flows.csv", "bars_ETH.csv", "options.csv", "synth.json"] {
        let a = fs::read(tmp.path().join("a").join(f)).unwrap();
        let b = fs::read(tmp.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs");
    }
    let a = fs::read(tmp.path().join("a/flows.csv")).unwrap();
    let c = fs::read(tmp.path().join("c/flows.csv")).unwrap();
    assert_ne!(a, c);
}

#[test]
fn report_collects_available_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    heatmap_data(tmp.path());
    let mut args = REGRESS.to_vec();
    args.extend(["--horizons", "1", "--out", "res"]);
    ok(&args, tmp.path());
    ok(&["report", "--dir", "res"], tmp.path());
    let md = fs::read_to_string(tmp.path().join("res/report.md")).unwrap();
    assert!(md.contains("## Regression heatmap"));
    assert!(md.contains("| USDT>ETH | return | single |"));
    assert!(!md.contains("## Option backtest"));

    let out = flowcast(&["report", "--dir", "nowhere"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}
