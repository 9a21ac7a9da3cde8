use std::io::Write;

use rayon::prelude::*;
use serde_json::json;
use skewgbm::free_boundary::{z_minus, z_plus};
use skewgbm::numeric_oracles::fd::CSV_SCHEMA;
use skewgbm::numeric_oracles::{fd_solve, mc_estimate, FdConfig, McConfig};
use skewgbm::roots::RootConfig;
use skewgbm::value_function::Constants;
use skewgbm::{solve, GbmReference, GridConfig, PiecewiseValueFunction, SkewCase, SkewGbmParams};

use crate::params::ParamArgs;
use crate::{Failure, Vary};

fn write_json<T: serde::Serialize>(value: &T, out: &mut dyn Write) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Usage(e.to_string()))?;
    writeln!(out, "{text}")?;
    Ok(())
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn region_flag(vf: &PiecewiseValueFunction, x: f64) -> &'static str {
    if vf.stopping_region.contains(x) {
        "stop"
    } else {
        "continue"
    }
}

/// 1.5 times the largest free boundary, skew level or classical threshold.
fn default_x_max(vf: &PiecewiseValueFunction) -> Result<f64, Failure> {
    let profile = skewgbm::classify(&vf.params)?;
    Ok(1.5 * vf.breakpoints().into_iter().fold(profile.z0.max(vf.params.z), f64::max))
}

/// `count` evenly spaced points in `(0, x_max]` plus every breakpoint.
fn x_grid(vf: &PiecewiseValueFunction, x_max: f64, count: usize) -> Vec<f64> {
    let mut xs: Vec<f64> = (1..=count).map(|i| x_max * i as f64 / count as f64).collect();
    xs.extend(vf.breakpoints().into_iter().filter(|&b| b <= x_max));
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

pub fn classify(params: &SkewGbmParams, out: &mut dyn Write) -> Result<(), Failure> {
    let profile = skewgbm::classify(params)?;
    write_json(&profile, out)
}

pub fn price(args: &ParamArgs, xs: Option<Vec<f64>>, gbm: bool, out: &mut dyn Write) -> Result<(), Failure> {
    if gbm {
        let (r, b, sigma, k) = args.resolve_gbm()?;
        let g = GbmReference::new(r, b, sigma, k)?;
        let xs = xs.unwrap_or_else(|| (1..=40).map(|i| 1.5 * g.boundary * i as f64 / 40.0).collect());
        writeln!(out, "# skewgbm price v1")?;
        writeln!(out, "# model=gbm n={} boundary={}", g.n, g.boundary)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "v", "dv_left", "dv_right", "region"])?;
        for x in xs {
            let v = g.value(x);
            let (dl, dr) = if x < g.boundary {
                (g.n * v / x, g.n * v / x)
            } else if x == g.boundary {
                (g.n * v / x, 1.0)
            } else {
                (1.0, 1.0)
            };
            let flag = if x >= g.boundary { "stop" } else { "continue" };
            w.write_record([num(x), num(v), num(dl), num(dr), flag.into()])?;
        }
        w.flush()?;
        return Ok(());
    }
    let params = args.resolve()?;
    let vf = solve(&params)?;
    let xs = match xs {
        Some(xs) => xs,
        None => x_grid(&vf, default_x_max(&vf)?, 40),
    };
    let constants = serde_json::to_string(&vf.constants).map_err(|e| Failure::Usage(e.to_string()))?;
    writeln!(out, "# skewgbm price v1")?;
    writeln!(out, "# case={} regime={} constants={constants}", vf.case, vf.regime)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "v", "dv_left", "dv_right", "region"])?;
    for x in xs {
        let row = [num(x), num(vf.evaluate(x)?), num(vf.d_left(x)?), num(vf.d_right(x)?), region_flag(&vf, x).into()];
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

fn apply(p: SkewGbmParams, vary: Vary, value: f64) -> SkewGbmParams {
    match vary {
        Vary::Z => p.with_z(value),
        Vary::Beta => p.with_beta(value),
        Vary::B => SkewGbmParams { b: value, ..p },
        Vary::Sigma => SkewGbmParams { sigma: value, ..p },
    }
}

struct BoundaryRow {
    case: Option<SkewCase>,
    regime: String,
    alpha: Option<f64>,
    xi: Option<f64>,
    gamma: Option<f64>,
    zeta: Option<f64>,
    z_minus: Option<f64>,
    z_plus: Option<f64>,
    error: String,
}

fn boundary_row(p: &SkewGbmParams) -> BoundaryRow {
    let mut row = BoundaryRow {
        case: None,
        regime: String::new(),
        alpha: None,
        xi: None,
        gamma: None,
        zeta: None,
        z_minus: None,
        z_plus: None,
        error: String::new(),
    };
    let profile = match skewgbm::classify(p) {
        Ok(profile) => profile,
        Err(e) => {
            row.error = e.to_string();
            return row;
        }
    };
    row.case = Some(profile.case);
    let cfg = RootConfig::for_strike(p.k);
    match profile.case {
        SkewCase::III => row.z_minus = z_minus(&profile, &cfg).ok(),
        SkewCase::IV => row.z_plus = z_plus(&profile, &cfg).ok(),
        _ => {}
    }
    match skewgbm::value_function::solve_profile(&profile, &cfg) {
        Ok(vf) => {
            row.regime = vf.regime.to_string();
            match vf.constants {
                Constants::Threshold { a, .. } if vf.regime == skewgbm::Regime::OneSidedAlpha => row.alpha = Some(a),
                Constants::PointRay { xi, .. } => row.xi = Some(xi),
                Constants::TwoIntervals { gamma, zeta, .. } => {
                    row.gamma = Some(gamma);
                    row.zeta = Some(zeta);
                }
                _ => {}
            }
        }
        Err(e) => row.error = e.to_string(),
    }
    row
}

fn check_sweep(lo: f64, hi: f64, count: usize) -> Result<(), Failure> {
    if !(lo < hi) {
        return Err(Failure::Usage(format!("need lo < hi, got {lo} and {hi}")));
    }
    if count < 2 {
        return Err(Failure::Usage(format!("need count >= 2, got {count}")));
    }
    Ok(())
}

pub fn boundary(
    params: &SkewGbmParams,
    vary: Vary,
    lo: f64,
    hi: f64,
    count: usize,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    check_sweep(lo, hi, count)?;
    let values: Vec<f64> = (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect();
    let rows: Vec<BoundaryRow> = values.par_iter().map(|&v| boundary_row(&apply(*params, vary, v))).collect();
    writeln!(out, "# skewgbm boundary v1")?;
    writeln!(out, "# base={}", serde_json::to_string(params).map_err(|e| Failure::Usage(e.to_string()))?)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", vary.name(), "case", "regime", "alpha", "xi", "gamma", "zeta", "z_minus", "z_plus", "error"])?;
    for (i, (v, row)) in values.iter().zip(rows).enumerate() {
        w.write_record([
            i.to_string(),
            num(*v),
            row.case.map(|c| c.to_string()).unwrap_or_default(),
            row.regime,
            opt(row.alpha),
            opt(row.xi),
            opt(row.gamma),
            opt(row.zeta),
            opt(row.z_minus),
            opt(row.z_plus),
            row.error,
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn sweep(
    args: &ParamArgs,
    vary: Option<Vary>,
    values: Option<Vec<f64>>,
    x_max: Option<f64>,
    points: usize,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let base = args.resolve()?;
    let (vary, values) = match (vary, values) {
        (Some(v), Some(vals)) => (v, vals),
        (None, None) => (Vary::Z, vec![base.z]),
        _ => return Err(Failure::Usage("--vary and --values go together".into())),
    };
    if points < 2 {
        return Err(Failure::Usage(format!("need points >= 2, got {points}")));
    }
    let curves: Vec<PiecewiseValueFunction> = values
        .par_iter()
        .map(|&v| solve(&apply(base, vary, v)))
        .collect::<Result<_, _>>()?;
    let x_max = match x_max {
        Some(x) => x,
        None => curves.iter().map(default_x_max).collect::<Result<Vec<_>, _>>()?.into_iter().fold(0.0, f64::max),
    };
    writeln!(out, "# skewgbm sweep v1")?;
    if let Some(n) = args.figure {
        writeln!(out, "# figure={n}")?;
    }
    writeln!(out, "# base={}", serde_json::to_string(&base).map_err(|e| Failure::Usage(e.to_string()))?)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["curve", vary.name(), "regime", "x", "v", "payoff", "region"])?;
    for (i, (v, vf)) in values.iter().zip(&curves).enumerate() {
        for x in x_grid(vf, x_max, points) {
            let payoff = (x - vf.params.k).max(0.0);
            w.write_record([
                i.to_string(),
                num(*v),
                vf.regime.to_string(),
                num(x),
                num(vf.evaluate(x)?),
                num(payoff),
                region_flag(vf, x).into(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn verify(params: &SkewGbmParams, nodes: usize, tol_gen: f64, tol_obs: f64, out: &mut dyn Write) -> Result<(), Failure> {
    let vf = solve(params)?;
    let cfg = GridConfig { nodes, tol_gen, tol_obs, ..GridConfig::default() };
    let report = skewgbm::verify(&vf, params, &cfg)?;
    write_json(&report, out)?;
    if report.pass {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

pub fn oracle_fd(params: &SkewGbmParams, nodes: usize, tol: f64, out: &mut dyn Write) -> Result<(), Failure> {
    let vf = solve(params)?;
    let sol = fd_solve(params, &FdConfig::with_nodes(nodes))?;
    let cmp = sol.compare(&vf)?;
    writeln!(out, "{CSV_SCHEMA}")?;
    writeln!(
        out,
        "# regime={} nodes={nodes} sweeps={} omega={} max_rel_err={}",
        vf.regime, sol.sweeps, sol.omega, cmp.max_rel_err
    )?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "v_fd", "v_analytic", "diff", "active"])?;
    for ((x, a, b, d), active) in cmp.rows.iter().zip(&sol.active) {
        w.write_record([num(*x), num(*a), num(*b), num(*d), u8::from(*active).to_string()])?;
    }
    w.flush()?;
    if cmp.max_rel_err <= tol {
        Ok(())
    } else {
        Err(Failure::Oracle(format!("max relative difference {:e} exceeds {tol:e}", cmp.max_rel_err)))
    }
}

pub fn oracle_mc(params: &SkewGbmParams, x0: Option<f64>, paths: u64, seed: u64, out: &mut dyn Write) -> Result<(), Failure> {
    let vf = solve(params)?;
    let x0 = x0.unwrap_or(params.k);
    let cfg = McConfig::for_rate(params.r, paths, seed);
    let est = mc_estimate(params, &vf.stopping_region, x0, &cfg)?;
    let v = vf.evaluate(x0)?;
    let diff = est.mean - v;
    let z_score = if est.se > 0.0 { diff / est.se } else { 0.0 };
    let pass = diff.abs() <= 3.0 * est.se + 1e-3 * v;
    write_json(
        &json!({
            "x0": x0,
            "analytic": v,
            "estimate": est,
            "z_score": z_score,
            "pass": pass,
        }),
        out,
    )?;
    if pass {
        Ok(())
    } else {
        Err(Failure::Oracle(format!("|v - mean| = {:e} with se {:e}", diff.abs(), est.se)))
    }
}
