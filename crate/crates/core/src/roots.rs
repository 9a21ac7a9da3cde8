//! Bracketed scalar root finding.
//!
//! Every solve keeps a sign-changing bracket; interpolation steps are only
//! accepted when they land strictly inside it (Brent's safeguards), so the
//! method never does worse than bisection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_iter: usize,
    pub expansion: f64,
}

impl Default for RootConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-13, abs_tol: 1e-14, max_iter: 200, expansion: 2.0 }
    }
}

impl RootConfig {
    /// Defaults with the absolute tolerance scaled to the strike.
    pub fn for_strike(k: f64) -> Self {
        Self { abs_tol: 1e-14 * k, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidParameter { name: "tolerance", reason: "must be positive".into() });
        }
        if !(self.expansion > 1.0) {
            return Err(Error::InvalidParameter { name: "expansion", reason: "must exceed 1".into() });
        }
        Ok(())
    }
}

/// Root of `f` in `[lo, hi]`, which must bracket a sign change.
pub fn brent<F: FnMut(f64) -> f64>(what: &'static str, mut f: F, lo: f64, hi: f64, cfg: &RootConfig) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return Err(Error::BracketFailure { what, lo, hi });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..cfg.max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * cfg.abs_tol.max(cfg.rel_tol * b.abs());
        let half = 0.5 * (c - b);
        if half.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * half * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * half * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * half * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = half;
                e = d;
            }
        } else {
            d = half;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(half) };
        fb = f(b);
        if !fb.is_finite() {
            return Err(Error::Domain(format!("{what}: non-finite value at {b}")));
        }
    }
    Err(Error::RootNotConverged { what, iterations: cfg.max_iter })
}

/// Moves `hi` geometrically away from `lo` until `f(hi)` has the sign
/// opposite to `f(lo)`; gives up beyond `cap`.
pub fn expand_up<F: FnMut(f64) -> f64>(
    what: &'static str,
    mut f: F,
    lo: f64,
    start: f64,
    cap: f64,
    cfg: &RootConfig,
) -> Result<(f64, f64)> {
    let flo = f(lo);
    let mut prev = lo;
    let mut hi = start;
    loop {
        let fh = f(hi);
        if fh.is_finite() && fh.signum() != flo.signum() {
            return Ok((prev, hi));
        }
        if hi >= cap {
            return Err(Error::BracketFailure { what, lo, hi });
        }
        prev = hi;
        hi = (hi * cfg.expansion).min(cap);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_simple_roots() {
        let cfg = RootConfig::default();
        let r = brent("sqrt2", |x| x * x - 2.0, 0.0, 2.0, &cfg).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
        let r = brent("cos", f64::cos, 1.0, 2.0, &cfg).unwrap();
        assert!((r - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn reports_missing_bracket() {
        let cfg = RootConfig::default();
        assert!(matches!(brent("x", |x| x * x + 1.0, -1.0, 1.0, &cfg), Err(Error::BracketFailure { .. })));
    }

    #[test]
    fn handles_steep_functions() {
        let cfg = RootConfig::default();
        let r = brent("steep", |x: f64| (x - 1.0).powi(31), 0.0, 3.0, &cfg).unwrap();
        assert!((r - 1.0).abs() < 1e-6);
    }

    #[test]
    fn expands_until_sign_change() {
        let cfg = RootConfig::default();
        let (a, b) = expand_up("exp", |x| x - 100.0, 1.0, 2.0, 1e3, &cfg).unwrap();
        assert!(a < 100.0 && b >= 100.0);
        assert!(expand_up("never", |x| x + 1.0, 1.0, 2.0, 1e3, &cfg).is_err());
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = RootConfig { expansion: 1.0, ..RootConfig::default() };
        assert!(cfg.validate().is_err());
    }
}
