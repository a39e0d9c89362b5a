use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

use gao_core::calibration::{regression_denominator, synthesize_quotes, QuoteStyle, SmileNode};
use gao_core::ModelParams;

fn gao(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gao"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn report(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("bad json ({e}): {}", stdout(o)))
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn write_quotes(name: &str, a_eps: f64, extra: &str) -> PathBuf {
    let model = ModelParams::illustration();
    let arc = model.arc().unwrap();
    let mut grid = Vec::new();
    for (t, maturity) in [(0.05, 0.45), (0.1, 0.5)] {
        for i in 0..7 {
            grid.push(SmileNode {
                t,
                maturity,
                moneyness: 0.97 + 0.01 * i as f64,
            });
        }
    }
    let rows = synthesize_quotes(
        &arc,
        &model,
        QuoteStyle::FloatingCall,
        100.0,
        &grid,
        a_eps,
        0.0,
        || 0.0,
    )
    .unwrap();
    let mut csv = String::from("t,T,spot,avg,strike,style,implied_vol\n");
    for q in &rows {
        csv.push_str(&format!(
            "{},{},{},{},,floating_call,{}\n",
            q.t, q.maturity, q.spot, q.avg, q.implied_vol
        ));
    }
    csv.push_str(extra);
    let path = scratch(name);
    std::fs::write(&path, csv).unwrap();
    path
}

#[test]
fn price_without_correction_equals_leading_order() {
    let o = gao(&["price", "--t", "0.1", "--avg", "101", "--json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = &report(&o)["outputs"];
    assert_eq!(out["price_hat"], out["c0"]);
    assert_eq!(report(&o)["command"], "price");
}

#[test]
fn price_prints_the_breakdown_as_json() {
    let o = gao(&[
        "price",
        "--style",
        "floating",
        "--kind",
        "call",
        "--spot",
        "2013.99",
        "--avg",
        "2013.99",
        "--t",
        "0",
        "--T",
        "0.5",
        "--k",
        "2",
        "--r",
        "0.0264",
        "--z0",
        "0.1834",
        "--alpha-prime",
        "0.20",
        "--v-eps",
        "0",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let b = report(&o);
    assert_eq!(b["price_hat"], b["c0"]);
    assert!(b["b0"].as_f64().unwrap() > 0.0);
}

#[test]
fn replayed_price_report_is_bit_identical() {
    let first = gao(&[
        "price",
        "--style",
        "fixed",
        "--kind",
        "put",
        "--strike",
        "98.7",
        "--t",
        "0.17",
        "--avg",
        "101.3",
        "--v-eps",
        "-0.0159606",
        "--json",
    ]);
    assert!(first.status.success(), "{}", stderr(&first));
    let saved = scratch("price_report.json");
    std::fs::write(&saved, &first.stdout).unwrap();
    let again = gao(&["price", "--replay", saved.to_str().unwrap(), "--json"]);
    assert!(again.status.success(), "{}", stderr(&again));
    let (a, b) = (report(&first), report(&again));
    assert_eq!(a["inputs"], b["inputs"]);
    assert_eq!(a["inputs_digest"], b["inputs_digest"]);
    assert_eq!(
        serde_json::to_string(&a["outputs"]).unwrap(),
        serde_json::to_string(&b["outputs"]).unwrap()
    );
}

#[test]
fn replay_rejects_other_reports() {
    let o = gao(&["smile", "--json", "--grid", "1:1:1", "--T", "0.5"]);
    let last = stdout(&o).lines().last().unwrap().to_string();
    let saved = scratch("smile_report.json");
    std::fs::write(&saved, last).unwrap();
    let o = gao(&["price", "--replay", saved.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn negative_values_parse_as_numbers() {
    let o = gao(&[
        "validate", "--rho-xy", "-0.4", "--paths", "2000", "--steps", "10", "--json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(report(&o)["inputs"]["model"]["rho_xy"], -0.4);
    let o = gao(&["price", "--r", "-0.01"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("r = -0.01"), "{}", stderr(&o));
}

#[test]
fn fixed_strike_needs_a_strike() {
    let o = gao(&["price", "--style", "fixed", "--kind", "put"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("strike K"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(gao(&["price", "--spot", "abc"]).status.code(), Some(2));
    assert_eq!(gao(&["price", "--spot", "-5"]).status.code(), Some(2));
}

#[test]
fn gamma_off_pins_gamma_to_one() {
    let base = [
        "price", "--style", "fixed", "--kind", "put", "--strike", "100",
    ];
    let args = [&base[..], &["--t", "0.3", "--v-eps", "-0.016", "--json"]].concat();
    let on = report(&gao(&args));
    let off = report(&gao(&[&args[..], &["--gamma-off"]].concat()));
    assert!(on["outputs"]["gamma"].as_f64().unwrap() < 1.0);
    assert_eq!(off["outputs"]["gamma"].as_f64(), Some(1.0));
    assert_eq!(on["outputs"]["b0"], off["outputs"]["b0"]);
    assert_eq!(off["outputs"]["c0"], off["outputs"]["b0"]);
    assert_ne!(on["inputs_digest"], off["inputs_digest"]);
}

#[test]
fn calibrate_recovers_slope_and_lists_rejects() {
    let a_eps = 0.6367;
    let quotes = write_quotes(
        "quotes.csv",
        a_eps,
        "0.1,0.5,100,100,,floating_call,-0.2\n0.1,0.5,100,oops,,floating_call,0.2\n",
    );
    let scatter = scratch("scatter.csv");
    let o = gao(&[
        "calibrate",
        "--quotes",
        quotes.to_str().unwrap(),
        "--scatter-out",
        scatter.to_str().unwrap(),
        "--json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = report(&o);
    let fit = &r["outputs"];
    assert!(
        (fit["a_eps"].as_f64().unwrap() - a_eps).abs() < 1e-8,
        "{fit}"
    );
    assert_eq!(fit["n"], 14);
    assert_eq!(fit["rejects"].as_array().unwrap().len(), 2);
    let warnings = r["warnings"].as_array().unwrap();
    assert!(warnings
        .iter()
        .any(|w| w.as_str().unwrap().starts_with("line 16")));
    assert!(warnings
        .iter()
        .any(|w| w.as_str().unwrap().starts_with("line 17")));
    let scatter = std::fs::read_to_string(scatter).unwrap();
    assert!(scatter.starts_with("x,y\n"));
    assert_eq!(scatter.lines().count(), 15);

    let model = ModelParams::illustration();
    let sigma = model.arc().unwrap().effective_vol(0.1);
    let expected = a_eps * model.r * sigma / regression_denominator(model.k, 0.1, 0.5).unwrap();
    let cell = fit["v_eps_by_cell"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["t"] == 0.1)
        .unwrap();
    let v_eps = cell["v_eps"].as_f64().unwrap();
    assert!(
        (v_eps - expected).abs() < 1e-8 * expected.abs(),
        "{v_eps} vs {expected}"
    );
}

#[test]
fn calibrate_data_failures_exit_three() {
    let empty = scratch("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let o = gao(&["calibrate", "--quotes", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));

    let one = scratch("one.csv");
    std::fs::write(
        &one,
        "t,T,spot,avg,strike,style,implied_vol\n0.1,0.5,100,100,,floating_call,0.2\n",
    )
    .unwrap();
    let o = gao(&["calibrate", "--quotes", one.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn calibrate_missing_column_is_a_validation_error() {
    let bad = scratch("bad_header.csv");
    std::fs::write(&bad, "t,T,spot\n0.1,0.5,100\n").unwrap();
    let o = gao(&["calibrate", "--quotes", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn validate_is_deterministic_and_warns_when_underpowered() {
    let args = [
        "validate", "--paths", "2000", "--steps", "50", "--seed", "9", "--json",
    ];
    let a = gao(&args);
    let b = gao(&args);
    assert!(a.status.success(), "{}", stderr(&a));
    assert!(stderr(&a).contains("underpowered"));
    let (ra, rb) = (report(&a), report(&b));
    assert_eq!(ra["outputs"], rb["outputs"]);
    assert_eq!(ra["inputs_digest"], rb["inputs_digest"]);
    assert_eq!(ra["outputs"]["comparisons"].as_array().unwrap().len(), 3);

    let other = report(&gao(&[
        "validate", "--paths", "2000", "--steps", "50", "--seed", "10", "--json",
    ]));
    assert_ne!(ra["outputs"], other["outputs"]);
}

#[test]
fn validate_passes_at_default_settings() {
    let o = gao(&["validate", "--paths", "20000", "--steps", "50"]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert_eq!(stdout(&o).matches(" pass").count(), 3);
    assert!(!stderr(&o).contains("underpowered"));
}

#[test]
fn smile_is_flat_without_correction() {
    let o = gao(&["smile", "--grid", "0.95:1.05:5", "--T", "0.3,0.5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("maturity,moneyness,implied_vol"));
    let ivs: Vec<f64> = lines
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(ivs.len(), 10);
    let sigma = ModelParams::illustration()
        .arc()
        .unwrap()
        .effective_vol(0.1);
    for iv in ivs {
        assert!((iv - sigma).abs() < 1e-8, "{iv} vs {sigma}");
    }
}

#[test]
fn smile_is_skewed_with_negative_correction() {
    let out = scratch("smile.csv");
    let o = gao(&[
        "smile",
        "--v-eps",
        "-0.016",
        "--grid",
        "0.97:1.03:3",
        "--T",
        "0.5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(out).unwrap();
    let ivs: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(ivs[0] < ivs[1] && ivs[1] < ivs[2], "{ivs:?}");
}

#[test]
fn smile_json_lines_stream_points_then_report() {
    let o = gao(&["smile", "--grid", "0.95:1.05:3", "--T", "0.3,0.5", "--json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let lines: Vec<Value> = stdout(&o)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 7);
    assert!(lines[..6].iter().all(|p| p["implied_vol"].is_f64()));
    assert_eq!(lines[6]["command"], "smile");
    assert_eq!(lines[6]["outputs"]["n_points"], 6);
}

#[test]
fn smile_flags_rows_past_the_singular_horizon() {
    // k = 2: T = 1.2 puts the pole kT = 2 inside [kt, kT] = [0.8, 2.4]
    let o = gao(&[
        "smile", "--t", "0.4", "--T", "0.5,1.2", "--grid", "0.99:1:2",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[..2].iter().all(|r| !r.ends_with(',')));
    assert!(rows[2..].iter().all(|r| r.ends_with(',')));
    assert_eq!(stderr(&o).matches("skipped").count(), 2);
}

#[test]
fn smile_is_finite_over_short_maturities() {
    let o = gao(&[
        "smile",
        "--t",
        "0",
        "--T",
        "0.01,0.05,0.1,0.25,0.5",
        "--grid",
        "0.97:1.03:7",
        "--v-eps",
        "-0.016",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).is_empty(), "{}", stderr(&o));
    for row in stdout(&o).lines().skip(1) {
        let iv: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert!(iv.is_finite() && iv > 0.0, "{row}");
    }
}

#[test]
fn full_mode_reports_the_fixed_put_gap_with_exit_four() {
    // the modification factor pulls the fixed ATM put far below the
    // simulated two-factor price; validate must surface that as a failure
    let o = gao(&[
        "validate", "--mode", "full", "--paths", "20000", "--steps", "50", "--json",
    ]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    let r = report(&o);
    let checks = r["outputs"]["comparisons"].as_array().unwrap();
    let put = checks
        .iter()
        .find(|c| c["name"] == "fixed ATM put")
        .unwrap();
    assert_eq!(put["pass"], false);
    let spot = checks
        .iter()
        .find(|c| c["name"] == "discounted spot")
        .unwrap();
    assert_eq!(spot["pass"], true);
}

#[test]
fn bad_grid_exits_two() {
    assert_eq!(
        gao(&["smile", "--grid", "1.1:0.9:3"]).status.code(),
        Some(2)
    );
}
