//! Browser bindings. Every export takes and returns JSON strings; failures
//! come back as `{"error": "..."}` so the page never has to catch.

use serde::Serialize;
use serde_json::json;
use skewgbm::free_boundary::{z_minus, z_plus};
use skewgbm::roots::RootConfig;
use skewgbm::value_function::{solve_profile, Constants};
use skewgbm::{atlas, solve, SkewCase, SkewGbmParams};
use wasm_bindgen::prelude::*;

fn wrap(res: Result<serde_json::Value, String>) -> String {
    match res {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

fn parse(params: &str) -> Result<SkewGbmParams, String> {
    serde_json::from_str(params).map_err(|e| format!("bad parameters: {e}"))
}

fn to_value<T: Serialize>(v: &T) -> Result<serde_json::Value, String> {
    serde_json::to_value(v).map_err(|e| e.to_string())
}

/// Parameters of the preset for figure `n`.
#[wasm_bindgen]
pub fn preset(n: u8) -> String {
    wrap(atlas::figure(n).map_err(|e| e.to_string()).and_then(|p| to_value(&p)))
}

/// Case profile plus the regime and free-boundary constants.
#[wasm_bindgen]
pub fn classify(params: &str) -> String {
    wrap((|| {
        let p = parse(params)?;
        let profile = skewgbm::classify(&p).map_err(|e| e.to_string())?;
        let vf = solve(&p).map_err(|e| e.to_string())?;
        let mut out = to_value(&profile)?;
        out["regime"] = json!(vf.regime.to_string());
        out["constants"] = to_value(&vf.constants)?;
        out["stopping"] = to_value(&vf.stopping_region)?;
        Ok(out)
    })())
}

/// `points` samples of v and the payoff on `(0, x_max]`, breakpoints included.
#[wasm_bindgen]
pub fn value_curve(params: &str, x_max: f64, points: usize) -> String {
    wrap((|| {
        let p = parse(params)?;
        if !(x_max > 0.0) || points < 2 {
            return Err("need x_max > 0 and points >= 2".into());
        }
        let vf = solve(&p).map_err(|e| e.to_string())?;
        let mut xs: Vec<f64> = (1..=points).map(|i| x_max * i as f64 / points as f64).collect();
        xs.extend(vf.breakpoints().into_iter().filter(|&b| b <= x_max));
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let v = xs.iter().map(|&x| vf.evaluate(x)).collect::<Result<Vec<_>, _>>().map_err(|e| e.to_string())?;
        let payoff: Vec<f64> = xs.iter().map(|&x| (x - p.k).max(0.0)).collect();
        let stop: Vec<bool> = xs.iter().map(|&x| vf.stopping_region.contains(x)).collect();
        Ok(json!({
            "regime": vf.regime.to_string(),
            "breakpoints": vf.breakpoints(),
            "x": xs,
            "v": v,
            "payoff": payoff,
            "stop": stop,
        }))
    })())
}

/// Free boundaries as z runs over `count` evenly spaced values in `[lo, hi]`.
/// Rows that fail carry an `error` instead of boundaries.
#[wasm_bindgen]
pub fn boundary_sweep(params: &str, lo: f64, hi: f64, count: usize) -> String {
    wrap((|| {
        let base = parse(params)?;
        if !(lo < hi) || count < 2 {
            return Err("need lo < hi and count >= 2".into());
        }
        let rows: Vec<serde_json::Value> = (0..count)
            .map(|i| {
                let z = lo + (hi - lo) * i as f64 / (count - 1) as f64;
                boundary_row(&base.with_z(z)).unwrap_or_else(|e| json!({ "z": z, "error": e }))
            })
            .collect();
        Ok(json!({ "rows": rows }))
    })())
}

fn boundary_row(p: &SkewGbmParams) -> Result<serde_json::Value, String> {
    let profile = skewgbm::classify(p).map_err(|e| e.to_string())?;
    let cfg = RootConfig::for_strike(p.k);
    let vf = solve_profile(&profile, &cfg).map_err(|e| e.to_string())?;
    let mut row = json!({ "z": p.z, "case": profile.case.to_string(), "regime": vf.regime.to_string() });
    match vf.constants {
        Constants::Threshold { a, .. } => row["threshold"] = json!(a),
        Constants::PointRay { xi, .. } => row["xi"] = json!(xi),
        Constants::TwoIntervals { gamma, zeta, .. } => {
            row["gamma"] = json!(gamma);
            row["zeta"] = json!(zeta);
        }
    }
    match profile.case {
        SkewCase::III => row["z_minus"] = json!(z_minus(&profile, &cfg).ok()),
        SkewCase::IV => row["z_plus"] = json!(z_plus(&profile, &cfg).ok()),
        _ => {}
    }
    Ok(row)
}
