//! Grid checks of the variational inequality for a candidate value function.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::free_boundary;
use crate::model::{classify, CaseProfile, SkewCase, SkewGbmParams};
use crate::roots::RootConfig;
use crate::special_functions::ExcessivePair;
use crate::value_function::{solve_profile, Component, PiecewiseValueFunction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub nodes: usize,
    /// Left end as a multiple of K.
    pub x_min_factor: f64,
    /// Right end as a multiple of the rightmost finite breakpoint (or 𝔷₀).
    pub x_max_factor: f64,
    /// Generator tolerance, relative to `r·v` in continuation and to `r·K` in stopping.
    pub tol_gen: f64,
    /// Obstacle tolerance, in units of K.
    pub tol_obs: f64,
    /// Continuity tolerance, in units of K.
    pub tol_cont: f64,
    pub tol_skew: f64,
    pub tol_smooth: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            nodes: 4096,
            x_min_factor: 1e-3,
            x_max_factor: 10.0,
            tol_gen: 1e-8,
            tol_obs: 1e-10,
            tol_cont: 1e-10,
            tol_skew: 1e-10,
            tol_smooth: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub nodes: usize,
    pub x_min: f64,
    pub x_max: f64,
    /// `max((x−K)⁺ − v)`.
    pub max_obstacle_violation: f64,
    /// `max |v − (x−K)|` over stopping-region nodes.
    pub max_stopping_mismatch: f64,
    /// `max |𝓛v|/(r·v)` over continuation nodes.
    pub max_generator_residual: f64,
    /// `max (bx − r(x−K))/(rK)` over stopping-interval interiors.
    pub max_stopping_generator: f64,
    /// `(1+β)v'₊(z) − (1−β)v'₋(z)`, scaled by `max(1, |v'₋(z)|)`.
    pub skew_residual: f64,
    pub z_is_stopping: bool,
    pub continuity_defect: f64,
    pub smooth_fit_defect: f64,
    /// `(v/φ)(x_min)` and the same ratio one decade inside.
    pub phi_ratio: (f64, f64),
    /// `(v/ψ)(x_max)` and the same ratio one decade inside.
    pub psi_ratio: (f64, f64),
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn failed(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect()
    }
}

fn grid_bounds(vf: &PiecewiseValueFunction, profile: &CaseProfile, cfg: &GridConfig) -> (f64, f64) {
    let k = vf.k();
    let right = vf.breakpoints().into_iter().fold(profile.z0, f64::max);
    (cfg.x_min_factor * k, cfg.x_max_factor * right)
}

/// Geometric grid with every breakpoint and `z` inserted.
pub fn verification_grid(vf: &PiecewiseValueFunction, cfg: &GridConfig) -> Result<Vec<f64>> {
    let profile = classify(&vf.params)?;
    let (lo, hi) = grid_bounds(vf, &profile, cfg);
    Ok(build_grid(lo, hi, cfg.nodes, vf.breakpoints().into_iter().chain([vf.params.z])))
}

fn build_grid(lo: f64, hi: f64, nodes: usize, extra: impl Iterator<Item = f64>) -> Vec<f64> {
    let nodes = nodes.max(2);
    let ratio = (hi / lo).ln();
    let mut xs: Vec<f64> = (0..nodes).map(|i| lo * (ratio * i as f64 / (nodes - 1) as f64).exp()).collect();
    xs.extend(extra.filter(|x| *x > lo && *x < hi));
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

/// Checks `vf` against the variational inequality of `params` on the grid of `cfg`.
pub fn verify(vf: &PiecewiseValueFunction, params: &SkewGbmParams, cfg: &GridConfig) -> Result<VerificationReport> {
    let profile = classify(params)?;
    let (k, r, z, beta) = (params.k, params.r, params.z, params.beta);
    let (x_min, x_max) = grid_bounds(vf, &profile, cfg);
    let xs = build_grid(x_min, x_max, cfg.nodes, vf.breakpoints().into_iter().chain([z]));
    let region = &vf.stopping_region;

    let mut obstacle: f64 = 0.0;
    let mut mismatch: f64 = 0.0;
    let mut gen_cont: f64 = 0.0;
    let mut gen_stop = f64::NEG_INFINITY;
    for &x in &xs {
        let left = vf.piece_left(x);
        let right = vf.piece_right(x);
        let v = vf.value_on(left, x);
        obstacle = obstacle.max((x - k).max(0.0) - v);
        if region.contains(x) {
            mismatch = mismatch.max((v - (x - k)).abs());
            let interior = region.components.iter().any(|c| match *c {
                Component::Interval { lo, hi } => lo < x && x < hi,
                Component::Point { .. } => false,
            });
            if interior {
                gen_stop = gen_stop.max((params.b * x - r * (x - k)) / (r * k));
            }
        } else {
            let sides: &[_] = if std::ptr::eq(left, right) { &[left] } else { &[left, right] };
            for &piece in sides {
                let scale = r * vf.value_on(piece, x).abs().max(f64::MIN_POSITIVE);
                gen_cont = gen_cont.max(vf.generator_on(piece, x).abs() / scale);
            }
        }
    }
    if gen_stop == f64::NEG_INFINITY {
        gen_stop = 0.0;
    }

    let mut continuity: f64 = 0.0;
    for &x in &vf.breakpoints() {
        let (l, rr) = (vf.value_on(vf.piece_left(x), x), vf.value_on(vf.piece_right(x), x));
        continuity = continuity.max((l - rr).abs());
    }
    for c in &region.components {
        if let Component::Point { x } = *c {
            continuity = continuity.max((vf.evaluate(x)? - (x - k)).abs());
        }
    }

    let z_is_stopping = region.contains(z);
    let (dl, dr) = (vf.d_left(z)?, vf.d_right(z)?);
    let skew_residual = ((1.0 + beta) * dr - (1.0 - beta) * dl) / dl.abs().max(1.0);
    let skew_value = if z_is_stopping { skew_residual.max(0.0) } else { skew_residual.abs() };

    let mut smooth: f64 = 0.0;
    for c in &region.components {
        if let Component::Interval { lo, hi } = *c {
            if lo != z {
                smooth = smooth.max((vf.d_left(lo)? - 1.0).abs());
            }
            if hi.is_finite() && hi != z {
                smooth = smooth.max((vf.d_right(hi)? - 1.0).abs());
            }
        }
    }

    let pair = ExcessivePair::new(&profile, z);
    let phi_ratio = (vf.evaluate(x_min)? / pair.phi(x_min)?, vf.evaluate(10.0 * x_min)? / pair.phi(10.0 * x_min)?);
    let psi_ratio = (vf.evaluate(x_max)? / pair.psi(x_max)?, vf.evaluate(0.1 * x_max)? / pair.psi(0.1 * x_max)?);

    let mut checks = Vec::new();
    let mut push = |name: &str, value: f64, tol: f64| {
        checks.push(Check { name: name.to_string(), value, tol, pass: value <= tol });
    };
    push("obstacle", obstacle, cfg.tol_obs * k);
    push("stopping_match", mismatch, cfg.tol_obs * k);
    push("generator_continuation", gen_cont, cfg.tol_gen);
    push("generator_stopping", gen_stop, cfg.tol_gen);
    push("continuity", continuity, cfg.tol_cont * k);
    push("skew_condition", skew_value, cfg.tol_skew);
    push("smooth_fit", smooth, cfg.tol_smooth);
    push("boundary_phi", phi_ratio.0 - phi_ratio.1, 0.0);
    push("boundary_psi", psi_ratio.0 - psi_ratio.1, 0.0);
    let pass = checks.iter().all(|c| c.pass);

    Ok(VerificationReport {
        nodes: xs.len(),
        x_min,
        x_max,
        max_obstacle_violation: obstacle,
        max_stopping_mismatch: mismatch,
        max_generator_residual: gen_cont,
        max_stopping_generator: gen_stop,
        skew_residual,
        z_is_stopping,
        continuity_defect: continuity,
        smooth_fit_defect: smooth,
        phi_ratio,
        psi_ratio,
        checks,
        pass,
    })
}

/// Dispatch boundaries in `z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeBoundary {
    ZBeta,
    Z0,
    ZMinus,
    Zc,
    ZPlus,
}

impl RegimeBoundary {
    pub const ALL: [RegimeBoundary; 5] =
        [RegimeBoundary::ZBeta, RegimeBoundary::Z0, RegimeBoundary::ZMinus, RegimeBoundary::Zc, RegimeBoundary::ZPlus];

    /// Boundaries at which the regime of `case` changes.
    pub fn applicable(case: SkewCase) -> &'static [RegimeBoundary] {
        match case {
            SkewCase::I | SkewCase::II => &[RegimeBoundary::ZBeta, RegimeBoundary::Z0],
            SkewCase::III => &[RegimeBoundary::ZMinus, RegimeBoundary::Zc, RegimeBoundary::Z0],
            SkewCase::IV => &[RegimeBoundary::ZPlus],
        }
    }

    /// Location of the boundary for `profile`.
    pub fn locate(self, profile: &CaseProfile, cfg: &RootConfig) -> Result<f64> {
        if !Self::applicable(profile.case).contains(&self) {
            let expected = match self {
                RegimeBoundary::ZBeta => "I or II",
                RegimeBoundary::Z0 => "I, II or III",
                RegimeBoundary::ZMinus | RegimeBoundary::Zc => "III",
                RegimeBoundary::ZPlus => "IV",
            };
            return Err(Error::CaseMismatch { expected, found: profile.case });
        }
        match self {
            RegimeBoundary::ZBeta => Ok(profile.zbeta.expect("cases I and II have zbeta")),
            RegimeBoundary::Z0 => Ok(profile.z0),
            RegimeBoundary::Zc => Ok(profile.zc),
            RegimeBoundary::ZMinus => free_boundary::z_minus(profile, cfg),
            RegimeBoundary::ZPlus => free_boundary::z_plus(profile, cfg),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityResult {
    pub boundary: RegimeBoundary,
    pub location: f64,
    pub below: crate::value_function::Regime,
    pub above: crate::value_function::Regime,
    pub sup_diff: f64,
}

/// Sup-norm distance between the value functions at `z = boundary·(1 ∓ offset)`.
pub fn regime_continuity_check(
    params: &SkewGbmParams,
    boundary: RegimeBoundary,
    offset: f64,
) -> Result<ContinuityResult> {
    let profile = classify(params)?;
    let cfg = RootConfig::for_strike(params.k);
    let location = boundary.locate(&profile, &cfg)?;
    let lo = classify(&params.with_z(location * (1.0 - offset)))?;
    let hi = classify(&params.with_z(location * (1.0 + offset)))?;
    let (vlo, vhi) = (solve_profile(&lo, &cfg)?, solve_profile(&hi, &cfg)?);
    let grid = GridConfig::default();
    let right = vlo.breakpoints().into_iter().chain(vhi.breakpoints()).fold(profile.z0, f64::max);
    let xs = build_grid(grid.x_min_factor * params.k, grid.x_max_factor * right, grid.nodes, std::iter::empty());
    let mut sup: f64 = 0.0;
    for &x in &xs {
        sup = sup.max((vlo.evaluate(x)? - vhi.evaluate(x)?).abs());
    }
    Ok(ContinuityResult { boundary, location, below: vlo.regime, above: vhi.regime, sup_diff: sup })
}
