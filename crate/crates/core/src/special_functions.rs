//! Minimal excessive functions ψ, φ and the scale function of the skew GBM.
//!
//! With `k = n − m`, the increasing solution is
//!
//! ```text
//! ψ(x) = xⁿ                               x < z
//! ψ(x) = xⁿ·(A + w·(z/x)ᵏ)                x ≥ z,   B(z) = w·zᵏ
//! ```
//!
//! and the decreasing one is
//!
//! ```text
//! φ(x) = xᵐ·(D + u·(x/z)ᵏ)                x < z,   C(z) = u·z⁻ᵏ
//! φ(x) = xᵐ                               x ≥ z
//! ```
//!
//! Both are kept in this factored form so that no `zᵏ` is ever formed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CaseProfile, SkewGbmParams};
use crate::powers::{pow, ratio_pow};

fn check_x(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("x = {x} must be positive and finite")))
    }
}

/// Coefficients of ψ(·; z) and φ(·; z) for one skew level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcessivePair {
    pub n: f64,
    pub m: f64,
    pub z: f64,
    /// Coefficient of `xⁿ` in ψ right of `z`.
    #[serde(rename = "A")]
    pub a: f64,
    /// `B(z)/zⁿ⁻ᵐ`.
    pub w: f64,
    /// Coefficient of `xᵐ` in φ left of `z`.
    #[serde(rename = "D")]
    pub d: f64,
    /// `C(z)·zⁿ⁻ᵐ`.
    pub u: f64,
}

/// ψ'' at a point; at `z` only the one-sided values exist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SecondDerivative {
    Value(f64),
    UndefinedAtZ { left: f64, right: f64 },
}

impl ExcessivePair {
    pub fn new(profile: &CaseProfile, z: f64) -> Self {
        let (n, m, beta) = (profile.n, profile.m, profile.beta());
        let k = n - m;
        let s = n * (1.0 - beta) - m * (1.0 + beta);
        Self {
            n,
            m,
            z,
            a: profile.a,
            w: 2.0 * n * beta / (k * (1.0 + beta)),
            d: s / (k * (1.0 - beta)),
            u: 2.0 * m * beta / (k * (1.0 - beta)),
        }
    }

    /// `B(z)`; may overflow for extreme `z` and `n − m`.
    pub fn bz(&self) -> f64 {
        self.w * pow(self.z, self.n - self.m)
    }

    /// `C(z)` of φ.
    pub fn phi_c(&self) -> f64 {
        self.u * pow(self.z, self.m - self.n)
    }

    /// `(z/x)ⁿ⁻ᵐ`.
    #[inline]
    fn decay(&self, x: f64) -> f64 {
        ratio_pow(self.z, x, self.n - self.m)
    }

    pub(crate) fn psi_at(&self, x: f64) -> f64 {
        let xn = pow(x, self.n);
        if x < self.z {
            xn
        } else {
            xn * (self.a + self.w * self.decay(x))
        }
    }

    pub(crate) fn psi_d_right_branch(&self, x: f64) -> f64 {
        pow(x, self.n - 1.0) * (self.n * self.a + self.m * self.w * self.decay(x))
    }

    pub(crate) fn psi_d_left_branch(&self, x: f64) -> f64 {
        self.n * pow(x, self.n - 1.0)
    }

    pub fn psi(&self, x: f64) -> Result<f64> {
        check_x(x)?;
        Ok(self.psi_at(x))
    }

    /// `(ln ψ(x), sign)`; finite where `xⁿ` itself would overflow.
    pub fn psi_log(&self, x: f64) -> Result<(f64, f64)> {
        check_x(x)?;
        let lx = self.n * x.ln();
        if x < self.z {
            return Ok((lx, 1.0));
        }
        let c = self.a + self.w * self.decay(x);
        Ok((lx + c.abs().ln(), c.signum()))
    }

    /// Left derivative ψ'(x−).
    pub fn psi_dminus(&self, x: f64) -> Result<f64> {
        check_x(x)?;
        Ok(if x <= self.z { self.psi_d_left_branch(x) } else { self.psi_d_right_branch(x) })
    }

    /// Right derivative ψ'(x+).
    pub fn psi_dplus(&self, x: f64) -> Result<f64> {
        check_x(x)?;
        Ok(if x < self.z { self.psi_d_left_branch(x) } else { self.psi_d_right_branch(x) })
    }

    pub fn psi_d2(&self, x: f64) -> Result<SecondDerivative> {
        check_x(x)?;
        let (n, m) = (self.n, self.m);
        let left = n * (n - 1.0) * pow(x, n - 2.0);
        let right = pow(x, n - 2.0) * (n * (n - 1.0) * self.a + m * (m - 1.0) * self.w * self.decay(x));
        Ok(if x < self.z {
            SecondDerivative::Value(left)
        } else if x > self.z {
            SecondDerivative::Value(right)
        } else {
            SecondDerivative::UndefinedAtZ { left, right }
        })
    }

    pub fn phi(&self, x: f64) -> Result<f64> {
        check_x(x)?;
        let xm = pow(x, self.m);
        Ok(if x >= self.z { xm } else { xm * (self.d + self.u * ratio_pow(x, self.z, self.n - self.m)) })
    }

    /// Left derivative φ'(x−).
    pub fn phi_dminus(&self, x: f64) -> Result<f64> {
        check_x(x)?;
        Ok(if x <= self.z { self.phi_d_left_branch(x) } else { self.m * pow(x, self.m - 1.0) })
    }

    /// Right derivative φ'(x+).
    pub fn phi_dplus(&self, x: f64) -> Result<f64> {
        check_x(x)?;
        Ok(if x < self.z { self.phi_d_left_branch(x) } else { self.m * pow(x, self.m - 1.0) })
    }

    fn phi_d_left_branch(&self, x: f64) -> f64 {
        pow(x, self.m - 1.0) * (self.m * self.d + self.n * self.u * ratio_pow(x, self.z, self.n - self.m))
    }
}

/// Scale function of the skew GBM, normalized so `p(x₁) = 0` and `p'(x₁−) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleFunction {
    pub x1: f64,
    /// `−2b/σ²`.
    pub exponent: f64,
    /// `(1−β)/(1+β)`.
    pub jump: f64,
    pub z: f64,
}

impl ScaleFunction {
    /// Normalized at `x₁ = K`.
    pub fn new(params: &SkewGbmParams) -> Self {
        Self::with_normalization(params, params.k)
    }

    pub fn with_normalization(params: &SkewGbmParams, x1: f64) -> Self {
        Self {
            x1,
            exponent: -2.0 * params.b / params.sigma2(),
            jump: (1.0 - params.beta) / (1.0 + params.beta),
            z: params.z,
        }
    }

    fn left_factor(&self) -> f64 {
        if self.x1 > self.z {
            1.0 / self.jump
        } else {
            1.0
        }
    }

    fn right_factor(&self) -> f64 {
        self.left_factor() * self.jump
    }

    /// Antiderivative of `(u/x₁)ᵉ` vanishing at `x₁`.
    fn h(&self, u: f64) -> f64 {
        let e1 = self.exponent + 1.0;
        let l = (u / self.x1).ln();
        if e1 == 0.0 {
            self.x1 * l
        } else {
            self.x1 * (e1 * l).exp_m1() / e1
        }
    }

    fn h_inverse(&self, h: f64) -> Option<f64> {
        let e1 = self.exponent + 1.0;
        if e1 == 0.0 {
            return Some(self.x1 * (h / self.x1).exp());
        }
        let t = e1 * h / self.x1;
        if t <= -1.0 {
            return None;
        }
        let u = self.x1 * (t.ln_1p() / e1).exp();
        (u > 0.0 && u.is_finite()).then_some(u)
    }

    fn q(&self, u: f64) -> f64 {
        let fl = self.left_factor();
        if u < self.z {
            fl * self.h(u)
        } else {
            let hz = self.h(self.z);
            fl * hz + self.right_factor() * (self.h(u) - hz)
        }
    }

    /// `p'(x)`, right-continuous at `z`.
    pub fn density(&self, x: f64) -> Result<f64> {
        check_x(x)?;
        let f = if x >= self.z { self.right_factor() } else { self.left_factor() };
        Ok(f * pow(x / self.x1, self.exponent))
    }

    /// `p'(x−)`.
    pub fn density_left(&self, x: f64) -> Result<f64> {
        check_x(x)?;
        let f = if x > self.z { self.right_factor() } else { self.left_factor() };
        Ok(f * pow(x / self.x1, self.exponent))
    }

    pub fn scale(&self, x: f64) -> Result<f64> {
        check_x(x)?;
        Ok(self.q(x) - self.q(self.x1))
    }

    pub fn inverse(&self, p: f64) -> Result<f64> {
        if !p.is_finite() {
            return Err(Error::Domain(format!("scale value {p} is not finite")));
        }
        let target = p + self.q(self.x1);
        let fl = self.left_factor();
        let qz = fl * self.h(self.z);
        let h = if target < qz { target / fl } else { self.h(self.z) + (target - qz) / self.right_factor() };
        self.h_inverse(h).ok_or_else(|| Error::Domain(format!("{p} is outside the range of the scale function")))
    }
}

const SIMPSON_PANEL_TOL: f64 = 1e-12;
const SIMPSON_MAX_DEPTH: u32 = 48;

fn simpson<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Result<f64> {
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        if !(flm.is_finite() && frm.is_finite()) {
            return Err(Error::Quadrature { lo: a, hi: b });
        }
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * SIMPSON_PANEL_TOL {
            return Ok(left + right + delta / 15.0);
        }
        if depth == 0 {
            return Err(Error::Quadrature { lo: a, hi: b });
        }
        Ok(rec(f, a, m, fa, flm, fm, left, depth - 1)? + rec(f, m, b, fm, frm, fb, right, depth - 1)?)
    }
    if lo == hi {
        return Ok(0.0);
    }
    let (a, b, sign) = if lo < hi { (lo, hi, 1.0) } else { (hi, lo, -1.0) };
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    if !(fa.is_finite() && fm.is_finite() && fb.is_finite()) {
        return Err(Error::Quadrature { lo: a, hi: b });
    }
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    Ok(sign * rec(f, a, b, fa, fm, fb, whole, SIMPSON_MAX_DEPTH)?)
}

/// Scale density of a diffusion with drift-to-variance ratio `drift(u) = b(u)/σ²(u)`
/// and finitely many skew atoms `(z_j, β_j)`, normalized by `p'(x₁−) = 1`.
pub fn scale_density_general<F: Fn(f64) -> f64>(x: f64, x1: f64, drift: F, atoms: &[(f64, f64)]) -> Result<f64> {
    check_x(x)?;
    check_x(x1)?;
    for (i, &(zj, bj)) in atoms.iter().enumerate() {
        check_x(zj)?;
        if !(bj > -1.0 && bj < 1.0) {
            return Err(Error::InvalidParameter { name: "atoms", reason: format!("beta_{i} = {bj} outside (-1, 1)") });
        }
        if atoms[..i].iter().any(|&(zk, _)| zk == zj) {
            return Err(Error::InvalidParameter { name: "atoms", reason: format!("duplicate level {zj}") });
        }
    }
    let integral = simpson(&|u| 2.0 * drift(u), x1, x)?;
    let mut log_atoms = 0.0;
    for &(zj, bj) in atoms {
        let power = f64::from(u8::from(x >= zj)) - f64::from(u8::from(x1 > zj));
        log_atoms += power * ((1.0 - bj) / (1.0 + bj)).ln();
    }
    Ok((log_atoms - integral).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::classify;

    fn pair(beta: f64, z: f64) -> (CaseProfile, ExcessivePair) {
        let p = classify(&SkewGbmParams::new(0.1, 0.05, 0.3, 1.0, z, beta)).unwrap();
        let e = ExcessivePair::new(&p, z);
        (p, e)
    }

    #[test]
    fn psi_reference_value() {
        let (_, e) = pair(-0.1, 1.0);
        assert!((e.psi(2.0).unwrap() - 2.958_929_627_988_344).abs() < 1e-13);
    }

    #[test]
    fn continuity_and_skew_condition_at_z() {
        for &beta in &[-0.9, -0.5, -0.1, 0.1, 0.3, 0.8] {
            for &z in &[0.3, 1.0, 4.0] {
                let (_, e) = pair(beta, z);
                let zn = pow(z, e.n);
                assert!((e.a * zn + e.bz() * pow(z, e.m) - zn).abs() < 1e-13 * zn);
                let (dm, dp) = (e.psi_dminus(z).unwrap(), e.psi_dplus(z).unwrap());
                assert!(((1.0 + beta) * dp - (1.0 - beta) * dm).abs() < 1e-13 * dm);
                let below = e.psi(z * (1.0 - 1e-14)).unwrap();
                assert!((below - e.psi(z).unwrap()).abs() < 1e-12 * zn);
                let zm = pow(z, e.m);
                assert!((e.phi(z).unwrap() - zm).abs() < 1e-14 * zm);
                assert!((e.phi(z * (1.0 - 1e-14)).unwrap() - zm).abs() < 1e-12 * zm);
                let (fm, fp) = (e.phi_dminus(z).unwrap(), e.phi_dplus(z).unwrap());
                assert!(((1.0 + beta) * fp - (1.0 - beta) * fm).abs() < 1e-13 * fm.abs());
            }
        }
    }

    #[test]
    fn coefficient_signs() {
        let (_, e) = pair(-0.4, 1.0);
        assert!(e.a > 1.0 && e.bz() < 0.0 && e.d > 0.0 && e.d < 1.0 && e.phi_c() > 0.0);
        let (_, e) = pair(0.4, 1.0);
        assert!(e.a > 0.0 && e.a < 1.0 && e.bz() > 0.0 && e.d > 1.0 && e.phi_c() < 0.0);
    }

    #[test]
    fn negative_beta_kinks_upward() {
        let (_, e) = pair(-0.3, 1.5);
        assert!(e.psi_dminus(1.5).unwrap() < e.psi_dplus(1.5).unwrap());
    }

    #[test]
    fn euler_ode_off_z() {
        let (p, e) = pair(-0.5, 1.3);
        let (r, b, s2) = (0.1, 0.05, 0.09);
        for &x in &[0.2, 1.0, 1.31, 2.0, 9.0] {
            let d2 = match e.psi_d2(x).unwrap() {
                SecondDerivative::Value(v) => v,
                _ => unreachable!(),
            };
            let v = e.psi(x).unwrap();
            let res = 0.5 * s2 * x * x * d2 + b * x * e.psi_dplus(x).unwrap() - r * v;
            assert!(res.abs() < 1e-12 * r * v, "x = {x}: {res}");
        }
        assert!(matches!(e.psi_d2(1.3).unwrap(), SecondDerivative::UndefinedAtZ { .. }));
        let _ = p;
    }

    #[test]
    fn log_representation_survives_overflow() {
        let (_, e) = pair(0.3, 1.0);
        let (l, s) = e.psi_log(1e300).unwrap();
        assert!(s > 0.0 && l.is_finite() && l > 600.0);
        let direct = e.psi(50.0).unwrap();
        let (l, _) = e.psi_log(50.0).unwrap();
        assert!((l.exp() - direct).abs() < 1e-12 * direct);
    }

    #[test]
    fn domain_errors() {
        let (_, e) = pair(0.3, 1.0);
        assert!(e.psi(0.0).is_err() && e.phi(-1.0).is_err() && e.psi_d2(f64::NAN).is_err());
    }

    #[test]
    fn scale_density_example() {
        let params = SkewGbmParams::new(0.1, 0.0, 0.3, 1.0, 1.0, 0.5);
        let s = ScaleFunction::new(&params);
        assert!((s.density(0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!((s.density(2.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn scale_jump_and_round_trip() {
        for &(b, beta, z, x1) in &[(0.05, 0.5, 1.0, 1.0), (-0.02, -0.7, 0.4, 1.0), (0.045, 0.2, 3.0, 1.0), (0.05, 0.3, 2.0, 5.0)] {
            let params = SkewGbmParams::new(0.1, b, 0.3, 1.0, z, beta);
            let s = ScaleFunction::with_normalization(&params, x1);
            let (l, r) = (s.density_left(z).unwrap(), s.density(z).unwrap());
            assert!(((1.0 + beta) * r - (1.0 - beta) * l).abs() < 1e-14 * l);
            assert_eq!(s.scale(x1).unwrap(), 0.0);
            for i in 0..100 {
                let x = 1e-2 * pow(1e4, i as f64 / 99.0);
                let p = s.scale(x).unwrap();
                let back = s.inverse(p).unwrap();
                assert!((back - x).abs() <= 1e-12 * x, "x = {x}, back = {back}");
            }
        }
    }

    #[test]
    fn scale_is_antiderivative() {
        let params = SkewGbmParams::new(0.1, 0.05, 0.3, 1.0, 1.7, -0.4);
        let s = ScaleFunction::new(&params);
        for &x in &[0.3, 1.2, 1.69, 1.71, 5.0] {
            let h = 1e-6 * x;
            let fd = (s.scale(x + h).unwrap() - s.scale(x - h).unwrap()) / (2.0 * h);
            assert!((fd - s.density(x).unwrap()).abs() < 1e-7 * fd, "x = {x}");
        }
    }

    #[test]
    fn general_density_matches_closed_form() {
        let params = SkewGbmParams::new(0.1, 0.05, 0.3, 1.0, 1.7, -0.4);
        let s = ScaleFunction::new(&params);
        let c = params.b / params.sigma2();
        for &x in &[0.2, 0.9, 1.0, 1.7, 2.5, 8.0] {
            let g = scale_density_general(x, 1.0, |u| c / u, &[(1.7, -0.4)]).unwrap();
            let d = s.density(x).unwrap();
            assert!((g - d).abs() <= 1e-10 * d, "x = {x}: {g} vs {d}");
        }
    }

    #[test]
    fn general_density_trivial_cases() {
        assert!((scale_density_general(3.0, 1.0, |_| 0.0, &[]).unwrap() - 1.0).abs() < 1e-15);
        let v = scale_density_general(3.0, 1.0, |_| 0.0, &[(1.5, 0.5), (2.5, 0.5)]).unwrap();
        assert!((v - 1.0 / 9.0).abs() < 1e-15);
        assert!(scale_density_general(3.0, 1.0, |_| 0.0, &[(1.5, 0.5), (1.5, 0.2)]).is_err());
        assert!(matches!(
            scale_density_general(3.0, 1.0, |u| 1.0 / (u - 2.0), &[]),
            Err(Error::Quadrature { .. })
        ));
    }
}
