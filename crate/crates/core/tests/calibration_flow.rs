use gao_core::calibration::{
    calibrate, ingest_quotes, smile_curve, synthesize_quotes, QuoteStyle, SmileNode,
};
use gao_core::ModelParams;

fn grid(t: f64, maturity: f64) -> Vec<SmileNode> {
    (0..11)
        .map(|i| SmileNode {
            t,
            maturity,
            moneyness: 0.97 + 0.006 * i as f64,
        })
        .collect()
}

fn to_csv(rows: &[gao_core::calibration::QuoteRow]) -> String {
    let mut out = String::from("t,T,spot,avg,strike,style,implied_vol\n");
    for q in rows {
        let strike = q.strike.map(|k| format!("{k:.17}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{:.17},{:.17},{},{},{:.17}\n",
            q.t,
            q.maturity,
            q.spot,
            q.avg,
            strike,
            q.style.as_str(),
            q.implied_vol
        ));
    }
    out
}

#[test]
fn csv_round_trip_recovers_slope_and_reports_rejects() {
    let model = ModelParams::illustration();
    let arc = model.arc().unwrap();
    let mut rows = Vec::new();
    for (t, maturity) in [(0.05, 0.45), (0.1, 0.5)] {
        rows.extend(
            synthesize_quotes(
                &arc,
                &model,
                QuoteStyle::FixedPut,
                100.0,
                &grid(t, maturity),
                0.4,
                0.002,
                || 0.0,
            )
            .unwrap(),
        );
    }
    let mut csv = to_csv(&rows);
    csv.push_str("0.1,0.5,100,100,,fixed_put,0.2\n");
    csv.push_str("0.1,0.5,100,100,95,fixed_put,oops\n");

    let ing = ingest_quotes(csv.as_bytes()).unwrap();
    assert_eq!(ing.rows.len(), 22);
    assert_eq!(ing.rejects.len(), 2);
    assert_eq!(ing.rejects[0].line, 24);
    assert_eq!(ing.rejects[1].line, 25);

    let report = calibrate(&ing.rows, &ing.lines, &arc, &model).unwrap();
    assert!((report.a_eps - 0.4).abs() < 1e-9, "{}", report.a_eps);
    assert!((report.d_eps - 0.002).abs() < 1e-9);
    assert!(report.r_squared > 0.999_999);
    assert_eq!(report.v_eps_by_cell.len(), 2);
    assert!(report.v_eps_range[0] <= report.v_eps_range[1]);
    assert!(report.v_eps_by_cell.iter().all(|c| c.v_eps < 0.0));
}

#[test]
fn mixed_styles_are_refused() {
    let model = ModelParams::illustration();
    let arc = model.arc().unwrap();
    let mut rows = synthesize_quotes(
        &arc,
        &model,
        QuoteStyle::FixedPut,
        100.0,
        &grid(0.1, 0.5),
        0.4,
        0.0,
        || 0.0,
    )
    .unwrap();
    rows.extend(
        synthesize_quotes(
            &arc,
            &model,
            QuoteStyle::FloatingCall,
            100.0,
            &grid(0.1, 0.5),
            0.4,
            0.0,
            || 0.0,
        )
        .unwrap(),
    );
    assert!(calibrate(&rows, &[], &arc, &model).is_err());
}

#[test]
fn smile_reproduces_synthesized_quotes() {
    let model = ModelParams::illustration();
    let arc = model.arc().unwrap();
    let nodes = grid(0.1, 0.5);
    let quotes = synthesize_quotes(
        &arc,
        &model,
        QuoteStyle::FloatingCall,
        100.0,
        &nodes,
        1.0,
        0.0,
        || 0.0,
    )
    .unwrap();
    let report = calibrate(&quotes, &[], &arc, &model).unwrap();
    let v_eps = report.v_eps_by_cell[0].v_eps;
    let smile = smile_curve(&arc, &model, v_eps, QuoteStyle::FloatingCall, 100.0, &nodes);
    for (p, q) in smile.iter().zip(&quotes) {
        let iv = p.implied_vol.unwrap();
        assert!(
            (iv - q.implied_vol).abs() < 1e-12,
            "{iv} vs {}",
            q.implied_vol
        );
    }
}
