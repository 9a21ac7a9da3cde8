//! Monte Carlo oracle.
//!
//! `Y = ln X` is a skew Brownian motion with drift `μ = b − σ²/2` at
//! `ℓ = ln z`. The piecewise-linear map `Z = S(Y)` with slopes `1+β` below `ℓ`
//! and `1−β` above removes the local time, so `Z` is Euler-stepped as
//! `Z += s(Z)·(μΔt + σ√Δt·ξ)` and mapped back.
//!
//! Discounting is done by killing each path at an independent `Exp(r)` time,
//! which has the same expectation as weighting by `e^{−rτ}` but lets most
//! paths end long before the horizon.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SkewGbmParams;
use crate::value_function::{Component, StoppingRegion};

const CHUNK: u64 = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    /// Total number of paths; antithetic runs use `paths/2` pairs.
    pub paths: u64,
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
    pub antithetic: bool,
}

impl McConfig {
    /// `Δt = 10⁻⁴/r` and the shortest horizon with `e^{−rT} ≤ 10⁻⁴`.
    pub fn for_rate(r: f64, paths: u64, seed: u64) -> Self {
        Self { paths, dt: 1e-4 / r, horizon: (1e4f64).ln() / r, seed, antithetic: true }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter { name: "dt", reason: "must be positive".into() });
        }
        if !(self.horizon > 0.0) {
            return Err(Error::InvalidParameter { name: "horizon", reason: "must be positive".into() });
        }
        if self.paths < 2 {
            return Err(Error::InvalidParameter { name: "paths", reason: "need at least 2".into() });
        }
        Ok(())
    }

    /// Upper bound `e^{−rT}` on the relative truncation bias.
    pub fn truncation_bound(&self, r: f64) -> f64 {
        (-r * self.horizon).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub se: f64,
    pub paths: u64,
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
}

impl McEstimate {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("estimate serializes")
    }
}

/// Log-space map between `Y` and `Z = S(Y)`.
#[derive(Debug, Clone, Copy)]
struct Transform {
    ell: f64,
    lo_slope: f64,
    hi_slope: f64,
}

impl Transform {
    fn new(params: &SkewGbmParams) -> Self {
        Self { ell: params.z.ln(), lo_slope: 1.0 + params.beta, hi_slope: 1.0 - params.beta }
    }

    fn slope(&self, zt: f64) -> f64 {
        if zt < 0.0 {
            self.lo_slope
        } else {
            self.hi_slope
        }
    }

    fn forward(&self, y: f64) -> f64 {
        let d = y - self.ell;
        d * if d < 0.0 { self.lo_slope } else { self.hi_slope }
    }

    fn back(&self, zt: f64) -> f64 {
        self.ell + zt / self.slope(zt)
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One path of `X` on the grid `0, Δt, …` up to `horizon`, from stream `stream`.
pub fn simulate_path(params: &SkewGbmParams, x0: f64, dt: f64, horizon: f64, seed: u64, stream: u64) -> Vec<f64> {
    let tr = Transform::new(params);
    let mu = params.b - 0.5 * params.sigma2();
    let sd = params.sigma * dt.sqrt();
    let steps = (horizon / dt).ceil() as usize;
    let mut rng = stream_rng(seed, stream);
    let mut zt = tr.forward(x0.ln());
    let mut out = Vec::with_capacity(steps + 1);
    out.push(x0);
    for _ in 0..steps {
        let xi: f64 = StandardNormal.sample(&mut rng);
        zt += tr.slope(zt) * (mu * dt + sd * xi);
        out.push(tr.back(zt).exp());
    }
    out
}

/// Stopping region in log coordinates.
#[derive(Debug, Clone)]
struct LogRegion {
    parts: Vec<(f64, f64)>,
}

impl LogRegion {
    fn new(region: &StoppingRegion) -> Self {
        let parts = region
            .components
            .iter()
            .map(|c| match *c {
                Component::Interval { lo, hi } => (lo.ln(), if hi.is_finite() { hi.ln() } else { f64::INFINITY }),
                Component::Point { x } => (x.ln(), x.ln()),
            })
            .collect();
        Self { parts }
    }

    /// Entry point of the step `prev → next` into the region, if any. A step
    /// that reaches or passes a component enters at its near endpoint, since
    /// the continuous path crossed it first; steps staying on one side of an
    /// endpoint may still touch it, which is decided by the Brownian-bridge
    /// crossing probability.
    fn entry<R: Rng>(&self, prev: f64, next: f64, ell: f64, var: f64, rng: &mut R) -> Option<f64> {
        fn closer(best: &mut Option<f64>, prev: f64, cand: f64) {
            if best.is_none_or(|b| (cand - prev).abs() < (b - prev).abs()) {
                *best = Some(cand);
            }
        }
        let mut best: Option<f64> = None;
        for &(a, b) in &self.parts {
            if prev < a && next >= a {
                closer(&mut best, prev, a);
            } else if prev > b && next <= b {
                closer(&mut best, prev, b);
            }
        }
        if best.is_some() {
            return best;
        }
        for &(a, b) in &self.parts {
            let e = if next < a { a } else { b };
            if !e.is_finite() {
                continue;
            }
            if (prev < ell) != (next < ell) && e != ell {
                continue;
            }
            let q = (e - prev) * (e - next);
            if q <= 0.0 || q > 20.0 * var {
                continue;
            }
            if rng.random::<f64>() < (-2.0 * q / var).exp() {
                closer(&mut best, prev, e);
            }
        }
        best
    }
}

struct PathRunner<'a> {
    tr: Transform,
    region: &'a LogRegion,
    mu: f64,
    sd: f64,
    dt: f64,
    var: f64,
    k: f64,
}

struct PathState {
    zt: f64,
    done: Option<f64>,
}

impl PathRunner<'_> {
    fn step<R: Rng>(&self, st: &mut PathState, xi: f64, rng: &mut R) {
        let prev = self.tr.back(st.zt);
        let s = self.tr.slope(st.zt);
        st.zt += s * (self.mu * self.dt + self.sd * xi);
        let next = self.tr.back(st.zt);
        if let Some(y) = self.region.entry(prev, next, self.tr.ell, self.var, rng) {
            st.done = Some((y.exp() - self.k).max(0.0));
        }
    }
}

fn pair_payoffs(params: &SkewGbmParams, region: &LogRegion, x0: f64, cfg: &McConfig, stream: u64) -> (f64, f64) {
    let tr = Transform::new(params);
    let runner = PathRunner {
        tr,
        region,
        mu: params.b - 0.5 * params.sigma2(),
        sd: params.sigma * cfg.dt.sqrt(),
        dt: cfg.dt,
        var: params.sigma2() * cfg.dt,
        k: params.k,
    };
    let mut rng = stream_rng(cfg.seed, stream);
    let kill: f64 = Exp::new(params.r).expect("positive rate").sample(&mut rng);
    let t_end = kill.min(cfg.horizon);
    let z0 = tr.forward(x0.ln());
    let mut a = PathState { zt: z0, done: None };
    let mut b = PathState { zt: z0, done: if cfg.antithetic { None } else { Some(f64::NAN) } };
    let mut t = 0.0;
    while a.done.is_none() || b.done.is_none() {
        t += cfg.dt;
        if t > t_end {
            break;
        }
        let xi: f64 = StandardNormal.sample(&mut rng);
        if a.done.is_none() {
            runner.step(&mut a, xi, &mut rng);
        }
        if b.done.is_none() {
            runner.step(&mut b, -xi, &mut rng);
        }
    }
    (a.done.unwrap_or(0.0), b.done.unwrap_or(0.0))
}

/// Estimates `E[e^{−rτ}(X_τ − K)⁺]` for the first entry time τ of `region`.
pub fn mc_estimate(params: &SkewGbmParams, region: &StoppingRegion, x0: f64, cfg: &McConfig) -> Result<McEstimate> {
    params.validate_finite()?;
    cfg.validate()?;
    if !(x0 > 0.0 && x0.is_finite()) {
        return Err(Error::Domain(format!("x0 = {x0} must be positive")));
    }
    let base = McEstimate { mean: 0.0, se: 0.0, paths: cfg.paths, dt: cfg.dt, horizon: cfg.horizon, seed: cfg.seed };
    if region.contains(x0) {
        return Ok(McEstimate { mean: x0 - params.k, ..base });
    }
    let log_region = LogRegion::new(region);
    let samples = if cfg.antithetic { cfg.paths / 2 } else { cfg.paths };
    let chunks = samples.div_ceil(CHUNK);
    let partial: Vec<(f64, f64, u64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let (mut s, mut s2, mut cnt) = (0.0, 0.0, 0);
            for i in c * CHUNK..((c + 1) * CHUNK).min(samples) {
                let (pa, pb) = pair_payoffs(params, &log_region, x0, cfg, i);
                let y = if cfg.antithetic { 0.5 * (pa + pb) } else { pa };
                s += y;
                s2 += y * y;
                cnt += 1;
            }
            (s, s2, cnt)
        })
        .collect();
    let (mut s, mut s2, mut cnt) = (0.0, 0.0, 0u64);
    for (a, b, c) in partial {
        s += a;
        s2 += b;
        cnt += c;
    }
    let nf = cnt as f64;
    let mean = s / nf;
    let var = ((s2 - nf * mean * mean) / (nf - 1.0)).max(0.0);
    Ok(McEstimate { mean, se: (var / nf).sqrt(), ..base })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcursionStatistic {
    /// Fraction of samples with `Y > ℓ`.
    pub fraction_above: f64,
    /// Standard error from per-path averages.
    pub se: f64,
    pub samples: u64,
    pub paths: u64,
}

/// Starts every path at `ℓ` and records `1{Y > ℓ}` every `stride` steps,
/// `samples_per_path` times.
pub fn excursion_statistic(
    params: &SkewGbmParams,
    dt: f64,
    paths: u64,
    samples_per_path: usize,
    stride: usize,
    seed: u64,
) -> ExcursionStatistic {
    let tr = Transform::new(params);
    let mu = params.b - 0.5 * params.sigma2();
    let sd = params.sigma * dt.sqrt();
    let chunks = paths.div_ceil(CHUNK);
    let partial: Vec<(f64, f64, u64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let (mut s, mut s2, mut cnt) = (0.0, 0.0, 0);
            for i in c * CHUNK..((c + 1) * CHUNK).min(paths) {
                let mut rng = stream_rng(seed, i);
                let mut zt = 0.0;
                let mut above = 0usize;
                for _ in 0..samples_per_path {
                    for _ in 0..stride {
                        let xi: f64 = StandardNormal.sample(&mut rng);
                        zt += tr.slope(zt) * (mu * dt + sd * xi);
                    }
                    above += usize::from(zt > 0.0);
                }
                let f = above as f64 / samples_per_path as f64;
                s += f;
                s2 += f * f;
                cnt += 1;
            }
            (s, s2, cnt)
        })
        .collect();
    let (mut s, mut s2, mut cnt) = (0.0, 0.0, 0u64);
    for (a, b, c) in partial {
        s += a;
        s2 += b;
        cnt += c;
    }
    let nf = cnt as f64;
    let mean = s / nf;
    let var = ((s2 - nf * mean * mean) / (nf - 1.0)).max(0.0);
    ExcursionStatistic { fraction_above: mean, se: (var / nf).sqrt(), samples: cnt * samples_per_path as u64, paths: cnt }
}
