use serde_json::Value;
use skewgbm_web::{boundary_sweep, classify, preset, value_curve};

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn preset_round_trips_through_classify() {
    let p = preset(13);
    let c = parse(classify(&p));
    assert_eq!(c["case"], "IV");
    assert_eq!(c["regime"], "TwoIntervals");
    assert!(parse(preset(3))["error"].is_string());
}

#[test]
fn curve_matches_payoff_in_stopping_region() {
    let c = parse(value_curve(&preset(4), 6.0, 60));
    let (x, v, stop) = (c["x"].as_array().unwrap(), c["v"].as_array().unwrap(), c["stop"].as_array().unwrap());
    assert_eq!(x.len(), v.len());
    for i in 0..x.len() {
        let (xi, vi) = (x[i].as_f64().unwrap(), v[i].as_f64().unwrap());
        assert!(vi >= (xi - 1.0).max(0.0) - 1e-12);
        if stop[i].as_bool().unwrap() {
            assert!((vi - (xi - 1.0)).abs() < 1e-12);
        }
    }
    assert!(stop.last().unwrap().as_bool().unwrap());
}

#[test]
fn sweep_rows_and_errors() {
    let s = parse(boundary_sweep(&preset(10), 4.0, 8.0, 5));
    let rows = s["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[0]["regime"], "OneSidedAlpha");
    assert_eq!(rows[4]["regime"], "TwoIntervals");
    assert!(rows[4]["gamma"].as_f64().unwrap() < rows[4]["zeta"].as_f64().unwrap());
    let bad = r#"{"r":0.04,"b":0.05,"sigma":0.3,"K":1,"z":1,"beta":0.2}"#;
    assert!(parse(boundary_sweep(bad, 1.0, 2.0, 2))["rows"][0]["error"].is_string());
    assert!(parse(value_curve("{", 1.0, 10))["error"].is_string());
}
