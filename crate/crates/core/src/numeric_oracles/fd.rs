//! Finite-difference obstacle solver in `y = ln x`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{classify, SkewGbmParams};
use crate::value_function::PiecewiseValueFunction;

pub const CSV_SCHEMA: &str = "# skewgbm fd v1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdConfig {
    pub nodes: usize,
    /// Defaults to `ln(1e−3·K)`.
    pub y_lo: Option<f64>,
    /// Defaults to `ln(max(10·𝔷₀, 4z))`.
    pub y_hi: Option<f64>,
    /// `None` picks the optimal SOR factor of the unconstrained system.
    pub omega: Option<f64>,
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self { nodes: 4000, y_lo: None, y_hi: None, omega: None, tol: 1e-10, max_sweeps: 200_000 }
    }
}

impl FdConfig {
    pub fn with_nodes(nodes: usize) -> Self {
        Self { nodes, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdSolution {
    pub xs: Vec<f64>,
    pub v: Vec<f64>,
    /// Nodes where `v` equals the payoff to within `1e−10·K`.
    pub active: Vec<bool>,
    /// Index of the node at `ln z`.
    pub iz: usize,
    pub h: f64,
    pub omega: f64,
    pub sweeps: usize,
    /// Largest update in the final sweep.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdComparison {
    /// `max |v_fd − v| / max(v, K)` over all nodes.
    pub max_rel_err: f64,
    pub rows: Vec<(f64, f64, f64, f64)>,
}

impl FdComparison {
    pub fn to_csv(&self) -> String {
        let mut s = format!("{CSV_SCHEMA}\nx,v_fd,v_analytic,diff\n");
        for (x, a, b, d) in &self.rows {
            let _ = writeln!(s, "{x},{a},{b},{d}");
        }
        s
    }
}

impl FdSolution {
    pub fn compare(&self, vf: &PiecewiseValueFunction) -> Result<FdComparison> {
        let k = vf.k();
        let mut worst: f64 = 0.0;
        let mut rows = Vec::with_capacity(self.xs.len());
        for (&x, &v) in self.xs.iter().zip(&self.v) {
            let a = vf.evaluate(x)?;
            let d = v - a;
            worst = worst.max(d.abs() / a.max(k));
            rows.push((x, v, a, d));
        }
        Ok(FdComparison { max_rel_err: worst, rows })
    }

    /// Maximal runs of active nodes as `(x_first, x_last)`.
    pub fn active_components(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut start = None;
        for (i, &a) in self.active.iter().enumerate() {
            match (a, start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    out.push((self.xs[s], self.xs[i - 1]));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            out.push((self.xs[s], *self.xs.last().expect("nonempty grid")));
        }
        out
    }
}

/// Solves `max{𝓛v, (x−K)⁺ − v} = 0` with the skew row at `ln z`, `v ∝ xⁿ`
/// at the left edge and `v = x − K` at the right edge.
pub fn fd_solve(params: &SkewGbmParams, cfg: &FdConfig) -> Result<FdSolution> {
    let profile = classify(params)?;
    let SkewGbmParams { r, b, k, z, beta, .. } = *params;
    if cfg.nodes < 500 {
        return Err(Error::InvalidParameter { name: "nodes", reason: format!("{} < 500", cfg.nodes) });
    }
    let ell = z.ln();
    let y_lo = cfg.y_lo.unwrap_or((1e-3 * k).ln());
    let y_hi = cfg.y_hi.unwrap_or((10.0 * profile.z0).max(4.0 * z).ln());
    if !(y_lo < ell && ell < y_hi) {
        return Err(Error::InvalidParameter {
            name: "domain",
            reason: format!("need y_lo < ln z < y_hi, got {y_lo} < {ell} < {y_hi}"),
        });
    }
    let n = cfg.nodes;
    let h = (y_hi - y_lo) / (n - 1) as f64;
    let iz = (((ell - y_lo) / h).round() as usize).clamp(1, n - 2);
    let y0 = ell - iz as f64 * h;
    let ys: Vec<f64> = (0..n).map(|i| if i == iz { ell } else { y0 + i as f64 * h }).collect();
    let xs: Vec<f64> = ys.iter().map(|y| y.exp()).collect();
    let payoff: Vec<f64> = xs.iter().map(|x| (x - k).max(0.0)).collect();

    let s2 = params.sigma2();
    let mu = b - 0.5 * s2;
    let diff = 0.5 * s2 / (h * h);
    let (lo_c, hi_c) = if diff >= (mu / (2.0 * h)).abs() {
        (diff - mu / (2.0 * h), diff + mu / (2.0 * h))
    } else {
        (diff + (-mu).max(0.0) / h, diff + mu.max(0.0) / h)
    };
    let diag = lo_c + hi_c + r;
    let (ca, cc) = (lo_c / diag, hi_c / diag);
    let (sa, sc) = (0.5 * (1.0 - beta), 0.5 * (1.0 + beta));

    let omega = cfg.omega.unwrap_or_else(|| {
        let rho = (lo_c + hi_c) / diag * (std::f64::consts::PI / (n - 1) as f64).cos();
        2.0 / (1.0 + (1.0 - rho * rho).sqrt())
    });

    // Near 0 the value is a multiple of x^n, which fixes v[0]/v[1].
    let left_ratio = (-profile.n * (ys[1] - ys[0])).exp();
    let mut v = payoff.clone();
    v[n - 1] = xs[n - 1] - k;
    let mut sweeps = 0;
    let mut residual = f64::INFINITY;
    while sweeps < cfg.max_sweeps {
        sweeps += 1;
        let mut worst: f64 = 0.0;
        for i in 1..n - 1 {
            let gs = if i == iz { sa * v[i - 1] + sc * v[i + 1] } else { ca * v[i - 1] + cc * v[i + 1] };
            let old = v[i];
            let new = (old + omega * (gs - old)).max(payoff[i]);
            v[i] = new;
            worst = worst.max((new - old).abs());
        }
        let left = v[1] * left_ratio;
        worst = worst.max((left - v[0]).abs());
        v[0] = left;
        residual = worst;
        if worst <= cfg.tol * k {
            break;
        }
    }
    if residual > cfg.tol * k {
        return Err(Error::NonConvergence { sweeps, residual });
    }
    let active = v.iter().zip(&payoff).map(|(v, p)| *p > 0.0 && v - p <= 1e-10 * k).collect();
    Ok(FdSolution { xs, v, active, iz, h, omega, sweeps, residual })
}
