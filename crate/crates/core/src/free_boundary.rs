//! Auxiliary functions F, g, J, G, H and the free-boundary solves.
//!
//! Public `*_aux` functions return the exact expressions. Solvers work with
//! rescaled versions (common positive factors divided out, powers written as
//! ratios) that have the same sign and roots but stay O(1) in magnitude.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CaseProfile, SkewCase};
use crate::powers::{pow, ratio_pow};
use crate::roots::{brent, expand_up, RootConfig};
use crate::special_functions::ExcessivePair;

/// Largest multiple of 𝔷₀ searched when a bracket must be grown.
pub const EXPANSION_CAP: f64 = 1e12;

fn check_pos(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {v} must be positive and finite")))
    }
}

fn require(profile: &CaseProfile, case: SkewCase, expected: &'static str) -> Result<()> {
    if profile.case == case {
        Ok(())
    } else {
        Err(Error::CaseMismatch { expected, found: profile.case })
    }
}

/// `F(x;z)/(A·xⁿ⁻ᵐ)`.
fn f_scaled(profile: &CaseProfile, pair: &ExcessivePair, x: f64) -> f64 {
    let (n, m, k) = (profile.n, profile.m, profile.k());
    ((n - 1.0) * x - n * k) + ((m - 1.0) * x - m * k) * (pair.w / pair.a) * ratio_pow(pair.z, x, n - m)
}

/// `F(x;z) = [(n−1)x − nK]·A·xⁿ⁻ᵐ + [(m−1)x − mK]·B(z)`.
pub fn f_aux(profile: &CaseProfile, x: f64, z: f64) -> Result<f64> {
    check_pos("x", x)?;
    check_pos("z", z)?;
    let pair = ExcessivePair::new(profile, z);
    Ok(pair.a * pow(x, profile.n - profile.m) * f_scaled(profile, &pair, x))
}

/// Root α(z) of `F(·;z)` giving the one-sided exercise threshold.
pub fn alpha(profile: &CaseProfile, z: f64, cfg: &RootConfig) -> Result<f64> {
    check_pos("z", z)?;
    let pair = ExcessivePair::new(profile, z);
    let z0 = profile.z0;
    // (n−1)𝔷₀ − nK vanishes exactly but not in floating point, and the other
    // term can be far below its rounding error.
    let f = |x: f64| {
        if x == z0 {
            let (m, k) = (profile.m, profile.k());
            ((m - 1.0) * x - m * k) * (pair.w / pair.a) * ratio_pow(pair.z, x, profile.n - m)
        } else {
            f_scaled(profile, &pair, x)
        }
    };
    match profile.case {
        SkewCase::I | SkewCase::II => {
            let zb = profile.zbeta_positive().expect("cases I and II have a positive critical point");
            if z >= zb {
                return Err(Error::Domain(format!("alpha needs z < {zb}, got {z}")));
            }
            brent("alpha", f, zb, z0, cfg)
        }
        SkewCase::III => {
            let edge = profile.frak_c.expect("case III carries frak_c") * profile.zc;
            if z >= edge {
                return Err(Error::Domain(format!("alpha needs z < {edge}, got {z}")));
            }
            brent("alpha", f, profile.zc, z0, cfg)
        }
        SkewCase::IV => {
            if z > z0 && f(z) > 0.0 {
                return brent("alpha", f, z0, z, cfg);
            }
            if let Some(zb) = profile.zbeta_positive() {
                if zb > z0 && f(zb) > 0.0 {
                    return brent("alpha", f, z0, zb, cfg);
                }
            }
            let start = if z > z0 { z } else { z0 * cfg.expansion };
            let cap = EXPANSION_CAP * z0.max(z);
            let (lo, hi) = expand_up("alpha", f, z0, start, cap, cfg)?;
            brent("alpha", f, lo, hi, cfg)
        }
    }
}

/// `g(·, z)` with α(z) solved once.
#[derive(Debug, Clone, Copy)]
pub struct GFunction {
    pub pair: ExcessivePair,
    pub alpha: f64,
    level: f64,
    k: f64,
}

impl GFunction {
    pub fn new(profile: &CaseProfile, z: f64, cfg: &RootConfig) -> Result<Self> {
        let pair = ExcessivePair::new(profile, z);
        let a = alpha(profile, z, cfg)?;
        let k = profile.k();
        Ok(Self { pair, alpha: a, level: (a - k) / pair.psi_at(a), k })
    }

    /// `Γ(z) = (α − K)/ψ(α; z)`.
    pub fn gamma_coefficient(&self) -> f64 {
        self.level
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.level - (x - self.k) / self.pair.psi_at(x)
    }
}

/// `g(x, z) = (α(z) − K)/ψ(α(z); z) − (x − K)/ψ(x; z)`.
pub fn g(profile: &CaseProfile, x: f64, z: f64, cfg: &RootConfig) -> Result<f64> {
    check_pos("x", x)?;
    Ok(GFunction::new(profile, z, cfg)?.eval(x))
}

/// Case III: the unique root z_⊖ ∈ (K, 𝔠𝔷_c) of `z ↦ g(z, z)`.
pub fn z_minus(profile: &CaseProfile, cfg: &RootConfig) -> Result<f64> {
    require(profile, SkewCase::III, "III")?;
    let edge = profile.frak_c.expect("case III carries frak_c") * profile.zc;
    let diag = |z: f64| GFunction::new(profile, z, cfg).map(|g| g.eval(z)).unwrap_or(f64::NAN);
    brent("z_minus", diag, profile.k(), edge * (1.0 - 1e-9), cfg)
}

/// Case IV: the unique root z_⊕ > 𝔷₀ of `z ↦ g(𝔷₀, z)`.
pub fn z_plus(profile: &CaseProfile, cfg: &RootConfig) -> Result<f64> {
    require(profile, SkewCase::IV, "IV")?;
    let z0 = profile.z0;
    let h = |z: f64| GFunction::new(profile, z, cfg).map(|g| g.eval(z0)).unwrap_or(f64::NAN);
    if let Some(zb) = profile.zbeta_positive() {
        if zb > z0 {
            return brent("z_plus", h, z0, zb, cfg);
        }
    }
    let (lo, hi) = expand_up("z_plus", h, z0, z0 * cfg.expansion, EXPANSION_CAP * z0, cfg)?;
    brent("z_plus", h, lo, hi, cfg)
}

/// Case III diagnostic: the root 𝔷(z) of `g(·, z)` strictly between `z` and α(z).
pub fn frakz(profile: &CaseProfile, z: f64, cfg: &RootConfig) -> Result<f64> {
    require(profile, SkewCase::III, "III")?;
    let gf = GFunction::new(profile, z, cfg)?;
    if gf.eval(z) >= 0.0 {
        return Ok(z);
    }
    const SCAN: usize = 64;
    let ratio = (gf.alpha / z).ln();
    for i in 1..SCAN {
        let x = z * (ratio * i as f64 / SCAN as f64).exp();
        if gf.eval(x) > 0.0 {
            return brent("frakz", |t| gf.eval(t), z, x, cfg);
        }
    }
    Err(Error::BracketFailure { what: "frakz", lo: z, hi: gf.alpha })
}

/// `J(x;z)/A` multiplied by `xᵐ`, written in ratios.
fn j_scaled(profile: &CaseProfile, x: f64, z: f64) -> f64 {
    let (n, m, k) = (profile.n, profile.m, profile.k());
    ((n - 1.0) * x - n * k) - ((m - 1.0) * x - m * k) * ratio_pow(z, x, n - m) - (n - m) * (z - k) * ratio_pow(x, z, m)
}

/// `J(x;z)/A = [(n−1)x − nK]x⁻ᵐ − [(m−1)x − mK]zⁿ⁻ᵐx⁻ⁿ − (n−m)(z−K)z⁻ᵐ`.
pub fn j_aux(profile: &CaseProfile, x: f64, z: f64) -> Result<f64> {
    check_pos("x", x)?;
    check_pos("z", z)?;
    Ok(pow(x, -profile.m) * j_scaled(profile, x, z))
}

/// Case III: ξ(z), the root of `J(·;z)` in `(𝔷_c, 𝔷₀)`.
pub fn xi(profile: &CaseProfile, z: f64, cfg: &RootConfig) -> Result<f64> {
    require(profile, SkewCase::III, "III")?;
    check_pos("z", z)?;
    if z >= profile.zc {
        return Err(Error::Domain(format!("xi needs z < {}, got {z}", profile.zc)));
    }
    // Near 𝔷_c the root is nearly triple and J(𝔷_c) can round to the wrong
    // sign; the limit ξ → 𝔷_c is then the best available answer.
    if j_scaled(profile, profile.zc, z) >= 0.0 {
        return Ok(profile.zc);
    }
    brent("xi", |x| j_scaled(profile, x, z), profile.zc, profile.z0, cfg)
}

/// Tangency constants `(C, D)` of the power pair `Cxⁿ + Dxᵐ` touching `x − K`
/// with unit slope at `x`.
pub fn tangent_constants(profile: &CaseProfile, x: f64) -> (f64, f64) {
    let (n, m, k) = (profile.n, profile.m, profile.k());
    let c = -((m - 1.0) * x - m * k) * pow(x, -n) / (n - m);
    let d = ((n - 1.0) * x - n * k) * pow(x, -m) / (n - m);
    (c, d)
}

fn p_term(profile: &CaseProfile, t: f64, z: f64) -> f64 {
    let (n, m, k) = (profile.n, profile.m, profile.k());
    ((n - 1.0) * t - n * k) * ratio_pow(t, z, -m) - ((m - 1.0) * t - m * k) * ratio_pow(t, z, -n)
}

/// `G(x, y; z)`.
pub fn g_aux(profile: &CaseProfile, x: f64, y: f64, z: f64) -> f64 {
    p_term(profile, y, z) - p_term(profile, x, z)
}

/// `H(x, y; z) = y⁻ⁿF(y;z) − ((1−β)/(1+β))[(n−1)x − nK]x⁻ᵐ`.
pub fn h_aux(profile: &CaseProfile, x: f64, y: f64, z: f64) -> f64 {
    let (n, m, k) = (profile.n, profile.m, profile.k());
    let pair = ExcessivePair::new(profile, z);
    let right = (((n - 1.0) * y - n * k) * pair.a + ((m - 1.0) * y - m * k) * pair.w * ratio_pow(z, y, n - m))
        * pow(y, -m);
    right - ((n - 1.0) * x - n * k) * pow(x, -m) / profile.skew_ratio()
}

/// Residuals of the continuity and skew conditions at `z` written in the
/// unreduced two-equation form, in the order (first, second).
pub fn gh_residuals(profile: &CaseProfile, gamma: f64, zeta: f64, z: f64) -> (f64, f64) {
    let (n, m, k, beta) = (profile.n, profile.m, profile.k(), profile.beta());
    let den = (n - m) * (1.0 + beta);
    let lo_m = (m - 1.0) * gamma - m * k;
    let lo_n = (n - 1.0) * gamma - n * k;
    let first = ((m - 1.0) * zeta - m * k) * ratio_pow(z, zeta, n)
        - profile.a * lo_m * ratio_pow(z, gamma, n)
        - 2.0 * m * beta / den * lo_n * ratio_pow(z, gamma, m);
    let second = ((n - 1.0) * zeta - n * k) * ratio_pow(z, zeta, m) + 2.0 * n * beta / den * lo_m * ratio_pow(z, gamma, n)
        - (n * (1.0 + beta) - m * (1.0 - beta)) / den * lo_n * ratio_pow(z, gamma, m);
    (first, second)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaZeta {
    pub gamma: f64,
    pub zeta: f64,
}

impl GammaZeta {
    /// `(C_l, D_l, C_r, D_r)`.
    pub fn constants(&self, profile: &CaseProfile) -> (f64, f64, f64, f64) {
        let (cl, dl) = tangent_constants(profile, self.gamma);
        let (cr, dr) = tangent_constants(profile, self.zeta);
        (cl, dl, cr, dr)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GammaZetaOutcome {
    Solution(GammaZeta),
    /// `z ≤ z_⊕`; carries `H(𝔷₀, L(𝔷₀); z) ≤ 0`.
    NoSolution { h_at_z0: f64 },
}

impl GammaZetaOutcome {
    pub fn solution(self) -> Option<GammaZeta> {
        match self {
            GammaZetaOutcome::Solution(s) => Some(s),
            GammaZetaOutcome::NoSolution { .. } => None,
        }
    }
}

/// Root `L(x;z) > z` of `G(x, ·; z)`.
fn inner_l(profile: &CaseProfile, x: f64, z: f64, cfg: &RootConfig) -> Result<f64> {
    if x >= z {
        return Ok(z);
    }
    let gx = |y: f64| g_aux(profile, x, y, z);
    // G(x, z; z) < 0 for x < z and L → z as x → z; once rounding erases the
    // sign, z is the root to working precision.
    if gx(z) >= 0.0 {
        return Ok(z);
    }
    let cap = EXPANSION_CAP * profile.z0.max(z);
    let (lo, hi) = expand_up("L", gx, z, z * cfg.expansion, cap, cfg)?;
    brent("L", gx, lo, hi, cfg)
}

/// Case IV: the pair `(γ, ζ)` with `𝔷₀ < γ < z < ζ`, or `NoSolution` if `z ≤ z_⊕`.
pub fn gamma_zeta(profile: &CaseProfile, z: f64, cfg: &RootConfig) -> Result<GammaZetaOutcome> {
    require(profile, SkewCase::IV, "IV")?;
    check_pos("z", z)?;
    let z0 = profile.z0;
    if z <= z0 {
        return Ok(GammaZetaOutcome::NoSolution { h_at_z0: f64::NEG_INFINITY });
    }
    let outer = |x: f64| inner_l(profile, x, z, cfg).map(|y| h_aux(profile, x, y, z)).unwrap_or(f64::NAN);
    let h0 = outer(z0);
    if h0.is_nan() {
        return Err(Error::BracketFailure { what: "L", lo: z, hi: EXPANSION_CAP * z });
    }
    if h0 <= 0.0 {
        return Ok(GammaZetaOutcome::NoSolution { h_at_z0: h0 });
    }
    let gamma = brent("gamma", outer, z0, z, cfg)?;
    let zeta = inner_l(profile, gamma, z, cfg)?;
    Ok(GammaZetaOutcome::Solution(GammaZeta { gamma, zeta }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{classify, SkewGbmParams};

    fn profile(beta: f64) -> CaseProfile {
        classify(&SkewGbmParams::new(0.1, 0.05, 0.3, 1.0, 1.0, beta)).unwrap()
    }

    fn cfg() -> RootConfig {
        RootConfig::default()
    }

    #[test]
    fn f_matches_psi_identity() {
        let p = profile(-0.3);
        let z = 1.4;
        let pair = ExcessivePair::new(&p, z);
        for &x in &[1.5, 2.0, 3.7, 10.0] {
            let lhs = ((x - 1.0) * pair.psi_dplus(x).unwrap() - pair.psi(x).unwrap()) * pow(x, 1.0 - p.m);
            let f = f_aux(&p, x, z).unwrap();
            assert!((lhs - f).abs() <= 1e-12 * f.abs().max(1.0), "x = {x}: {lhs} vs {f}");
        }
    }

    #[test]
    fn f_special_values() {
        let p = profile(-0.1);
        let z = 1.2;
        let pair = ExcessivePair::new(&p, z);
        let at_z0 = f_aux(&p, p.z0, z).unwrap();
        let expected = -(p.n - p.m) * pair.bz() / (p.n - 1.0);
        assert!((at_z0 - expected).abs() < 1e-13 && at_z0 > 0.0);
        let at_z = f_aux(&p, z, z).unwrap();
        let rho = p.skew_ratio();
        let expected = ((p.n - rho) * z - p.n) * pow(z, p.n - p.m) / rho;
        assert!((at_z - expected).abs() < 1e-13);
        let near0 = f_aux(&p, 1e-12, z).unwrap();
        assert!((near0 + p.m * pair.bz()).abs() < 1e-10 && near0 < 0.0);
    }

    #[test]
    fn alpha_reference_values() {
        let a = alpha(&profile(-0.1), 1.0, &cfg()).unwrap();
        assert!((a - 3.248_233_638_260_695).abs() < 1e-12);
        let a = alpha(&profile(-0.5), 1.0, &cfg()).unwrap();
        assert!((a - 3.039_943_001_044_622).abs() < 1e-12);
        let a = alpha(&profile(-0.5), 0.8, &cfg()).unwrap();
        assert!((a - 3.172_009_808_454_827).abs() < 1e-12);
        let a = alpha(&profile(0.3), 1.0, &cfg()).unwrap();
        assert!((a - 3.412_713_834_212_110).abs() < 1e-12);
        let a = alpha(&profile(0.1), 1.0, &cfg()).unwrap();
        assert!((a - 3.334_598_488_967_576).abs() < 1e-12);
    }

    #[test]
    fn alpha_limits_and_domain() {
        let p = profile(-0.1);
        let a = alpha(&p, 1e-6, &cfg()).unwrap();
        assert!((a - p.z0).abs() < 1e-4 * p.z0);
        let zb = p.zbeta.unwrap();
        let a = alpha(&p, zb * (1.0 - 1e-9), &cfg()).unwrap();
        assert!((a - zb).abs() < 1e-6);
        assert!(alpha(&p, zb, &cfg()).is_err());
        let p3 = profile(-0.5);
        assert!(alpha(&p3, p3.frak_c.unwrap() * p3.zc, &cfg()).is_err());
    }

    #[test]
    fn alpha_positive_derivative_and_signs() {
        for &beta in &[-0.1, -0.5, 0.3, 0.1] {
            let p = profile(beta);
            let z = 0.9;
            let a = alpha(&p, z, &cfg()).unwrap();
            let pair = ExcessivePair::new(&p, z);
            assert!(f_scaled(&p, &pair, a * (1.0 + 1e-6)) > 0.0);
            assert!(f_scaled(&p, &pair, a * (1.0 - 1e-6)) < 0.0);
            for &t in &[1.01, 1.5, 4.0, 50.0] {
                assert!(f_scaled(&p, &pair, a * t) > 0.0);
            }
        }
    }

    #[test]
    fn z_minus_reference() {
        let p = profile(-0.5);
        let zm = z_minus(&p, &cfg()).unwrap();
        assert!((zm - 1.336_454_912_539_572).abs() < 1e-10);
        assert!(g(&p, zm * (1.0 - 1e-6), zm * (1.0 - 1e-6), &cfg()).unwrap() > 0.0);
        assert!(g(&p, zm * (1.0 + 1e-6), zm * (1.0 + 1e-6), &cfg()).unwrap() < 0.0);
        assert!(matches!(z_minus(&profile(-0.1), &cfg()), Err(Error::CaseMismatch { .. })));
    }

    #[test]
    fn z_plus_reference() {
        let p = profile(0.3);
        let zp = z_plus(&p, &cfg()).unwrap();
        assert!((zp - 5.577_684_681_002_397).abs() < 1e-10);
        assert!(g(&p, p.z0, p.z0, &cfg()).unwrap() > 0.0);
        let p1 = profile(0.1);
        let zp1 = z_plus(&p1, &cfg()).unwrap();
        assert!((zp1 - 4.036_676_891_710_485).abs() < 1e-10);
        assert!(zp1 < p1.zbeta.unwrap());
        assert!(g(&p1, p1.z0, p1.zbeta.unwrap(), &cfg()).unwrap() < 0.0);
    }

    #[test]
    fn xi_reference_and_limits() {
        let p = profile(-0.5);
        let x = xi(&p, 1.6, &cfg()).unwrap();
        assert!((x - 2.222_247_534_410_517).abs() < 1e-10);
        let zm = z_minus(&p, &cfg()).unwrap();
        let x = xi(&p, zm, &cfg()).unwrap();
        let a = alpha(&p, zm, &cfg()).unwrap();
        assert!((x - a).abs() < 1e-9);
        assert!((j_aux(&p, 1.6, 1.6).unwrap()).abs() < 1e-14);
        let near = xi(&p, p.zc * (1.0 - 1e-6), &cfg()).unwrap();
        assert!((near - p.zc).abs() < 1e-2);
    }

    #[test]
    fn frakz_properties() {
        let p = profile(-0.5);
        let zm = z_minus(&p, &cfg()).unwrap();
        assert_eq!(frakz(&p, zm, &cfg()).unwrap(), zm);
        let z = 1.36;
        let fz = frakz(&p, z, &cfg()).unwrap();
        assert!(fz > z && fz < p.zc);
        assert!(g(&p, fz, z, &cfg()).unwrap().abs() < 1e-12);
    }

    #[test]
    fn g_h_identities() {
        let p = profile(0.3);
        let z = 6.0;
        assert_eq!(g_aux(&p, 4.0, 4.0, z), 0.0);
        let h = h_aux(&p, z, z, z);
        assert!((h + 2.0 * 0.3 * pow(z, 1.0 - p.m) / 1.3).abs() < 1e-12);
        assert!(g_aux(&p, 4.0, 1e6, z) > g_aux(&p, 4.0, 1e3, z));
    }

    #[test]
    fn gamma_zeta_reference() {
        for &(beta, z, gamma, zeta) in &[
            (0.3, 5.583_262_365_683_399, 3.297_740_542_893_813, 7.760_750_919_972_343),
            (0.3, 8.366_527_021_503_595, 5.598_651_984_429_295, 11.216_878_381_649_73),
            (0.1, 6.055_015_337_565_727, 5.245_295_191_026_652, 6.860_989_601_713_127),
        ] {
            let p = profile(beta);
            let s = gamma_zeta(&p, z, &cfg()).unwrap().solution().unwrap();
            assert!((s.gamma - gamma).abs() < 1e-9, "{} vs {gamma}", s.gamma);
            assert!((s.zeta - zeta).abs() < 1e-9, "{} vs {zeta}", s.zeta);
            assert!(p.z0 < s.gamma && s.gamma < z && z < s.zeta);
            assert!(g_aux(&p, s.gamma, s.zeta, z).abs() < 1e-10);
            assert!(h_aux(&p, s.gamma, s.zeta, z).abs() < 1e-10);
            let (r1, r2) = gh_residuals(&p, s.gamma, s.zeta, z);
            assert!(r1.abs() < 1e-9 && r2.abs() < 1e-9, "{r1} {r2}");
            let (cl, dl, cr, dr) = s.constants(&p);
            assert!(cl > 0.0 && dl > 0.0 && cr > 0.0 && dr > 0.0);
        }
    }

    #[test]
    fn gamma_zeta_existence_iff() {
        for &beta in &[0.3, 0.1] {
            let p = profile(beta);
            let zp = z_plus(&p, &cfg()).unwrap();
            for &off in &[1e-3, 1e-6] {
                let below = gamma_zeta(&p, zp * (1.0 - off), &cfg()).unwrap();
                assert!(below.solution().is_none(), "beta {beta} off {off}");
                let above = gamma_zeta(&p, zp * (1.0 + off), &cfg()).unwrap();
                assert!(above.solution().is_some(), "beta {beta} off {off}");
            }
        }
        assert!(gamma_zeta(&profile(-0.5), 3.0, &cfg()).is_err());
    }
}
