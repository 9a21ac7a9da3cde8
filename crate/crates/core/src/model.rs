//! Parameters, characteristic roots, critical points and case classification.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::powers::pow;

/// The six scalars defining the stopping problem.
///
/// Serialized as the flat object `{"r", "b", "sigma", "K", "z", "beta"}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkewGbmParams {
    /// Discount rate.
    pub r: f64,
    /// Drift rate.
    pub b: f64,
    /// Volatility; only σ² enters the model.
    pub sigma: f64,
    /// Strike.
    #[serde(rename = "K")]
    pub k: f64,
    /// Skew level.
    pub z: f64,
    /// Skewness in (−1, 1) \ {0}.
    pub beta: f64,
}

impl SkewGbmParams {
    pub fn new(r: f64, b: f64, sigma: f64, k: f64, z: f64, beta: f64) -> Self {
        Self { r, b, sigma, k, z, beta }
    }

    pub fn with_z(self, z: f64) -> Self {
        Self { z, ..self }
    }

    pub fn with_beta(self, beta: f64) -> Self {
        Self { beta, ..self }
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma * self.sigma
    }

    /// Checks every invariant except `r > b`.
    pub fn validate(&self) -> Result<()> {
        fn bad(name: &'static str, reason: &str) -> Error {
            Error::InvalidParameter { name, reason: reason.to_string() }
        }
        let all = [self.r, self.b, self.sigma, self.k, self.z, self.beta];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(bad("params", "all parameters must be finite"));
        }
        if self.r <= 0.0 {
            return Err(bad("r", "must be positive"));
        }
        if self.k <= 0.0 {
            return Err(bad("K", "must be positive"));
        }
        if self.z <= 0.0 {
            return Err(bad("z", "must be positive"));
        }
        if self.sigma == 0.0 {
            return Err(bad("sigma", "must be nonzero"));
        }
        if self.beta <= -1.0 || self.beta >= 1.0 {
            return Err(bad("beta", "must lie in (-1, 1)"));
        }
        if self.beta == 0.0 {
            return Err(Error::DegenerateBeta);
        }
        Ok(())
    }

    /// Validation plus the finiteness assumption `r > b`.
    pub fn validate_finite(&self) -> Result<()> {
        self.validate()?;
        if self.r <= self.b {
            return Err(Error::AssumptionViolated { r: self.r, b: self.b });
        }
        Ok(())
    }
}

/// Roots `m < 0 < n` of `½σ²k² + (b − ½σ²)k − r = 0`.
pub fn characteristic_roots(r: f64, b: f64, sigma: f64) -> (f64, f64) {
    let s2 = sigma * sigma;
    let c = b - 0.5 * s2;
    let disc = (c * c + 2.0 * s2 * r).sqrt();
    // Cancellation-free pairing: compute the larger-magnitude root directly
    // and recover the other from the product n·m = −2r/σ².
    let product = -2.0 * r / s2;
    if c <= 0.0 {
        let n = (-c + disc) / s2;
        (product / n, n)
    } else {
        let m = (-c - disc) / s2;
        (m, product / m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SkewCase {
    /// `b ≤ 0`, `β < 0`: ψ convex.
    I,
    /// `b > 0`, `β_c ≤ β < 0`: ψ convex.
    II,
    /// `b > 0`, `β < β_c`: ψ concave on `[z, z/𝔠]`.
    III,
    /// `β > 0`: ψ convex on each side of `z` but not globally.
    IV,
}

impl fmt::Display for SkewCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SkewCase::I => "I",
            SkewCase::II => "II",
            SkewCase::III => "III",
            SkewCase::IV => "IV",
        };
        f.write_str(s)
    }
}

/// Roots, critical points and case tag of a parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseProfile {
    pub params: SkewGbmParams,
    pub m: f64,
    pub n: f64,
    /// Coefficient `A` of `xⁿ` in ψ to the right of `z`.
    #[serde(rename = "A")]
    pub a: f64,
    pub beta_c: f64,
    /// `rK/(r − b)`.
    pub zc: f64,
    /// `nK/(n − (1+β)/(1−β))`; `None` when the denominator vanishes.
    pub zbeta: Option<f64>,
    /// `nK/(n − 1)`.
    pub z0: f64,
    /// Concavity constant 𝔠, Case III only.
    pub frak_c: Option<f64>,
    pub case: SkewCase,
}

impl CaseProfile {
    pub fn k(&self) -> f64 {
        self.params.k
    }

    pub fn beta(&self) -> f64 {
        self.params.beta
    }

    /// `(1+β)/(1−β)`.
    pub fn skew_ratio(&self) -> f64 {
        (1.0 + self.params.beta) / (1.0 - self.params.beta)
    }

    /// `(n−1)(1−β) − 2mβ`; negative exactly when ψ fails to be convex past `z`.
    pub fn convexity_indicator(&self) -> f64 {
        (self.n - 1.0) * (1.0 - self.params.beta) - 2.0 * self.m * self.params.beta
    }

    /// `𝔷_β` when it is a positive finite number.
    pub fn zbeta_positive(&self) -> Option<f64> {
        self.zbeta.filter(|z| *z > 0.0)
    }
}

/// Validates `params` and classifies them into Cases I–IV.
pub fn classify(params: &SkewGbmParams) -> Result<CaseProfile> {
    params.validate_finite()?;
    let SkewGbmParams { r, b, sigma, k, beta, .. } = *params;
    let (m, n) = characteristic_roots(r, b, sigma);
    let a = (n * (1.0 - beta) - m * (1.0 + beta)) / ((n - m) * (1.0 + beta));
    let beta_c = (n - 1.0) / (n + 2.0 * m - 1.0);
    let zc = r * k / (r - b);
    let ratio = (1.0 + beta) / (1.0 - beta);
    let zbeta = if n == ratio { None } else { Some(n * k / (n - ratio)) };
    let z0 = n * k / (n - 1.0);

    let case = if beta > 0.0 {
        SkewCase::IV
    } else if b <= 0.0 {
        SkewCase::I
    } else if beta >= beta_c {
        SkewCase::II
    } else {
        SkewCase::III
    };

    let frak_c = if case == SkewCase::III {
        let base = -(n - 1.0) * (n * (1.0 - beta) - m * (1.0 + beta)) / (2.0 * m * (m - 1.0) * beta);
        let c = pow(base, 1.0 / (n - m));
        if !(c > 0.0 && c < 1.0 && k < c * zc) {
            return Err(Error::Domain(format!(
                "case III constants inconsistent: frak_c = {c}, K = {k}, zc = {zc}"
            )));
        }
        Some(c)
    } else {
        None
    };

    Ok(CaseProfile { params: *params, m, n, a, beta_c, zc, zbeta, z0, frak_c, case })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurvatureSign {
    Positive,
    Negative,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    /// `(x, ψ''(x; z), sign)` per probe.
    pub probes: Vec<(f64, f64, CurvatureSign)>,
    /// `[z, z/𝔠]` in Case III.
    pub concavity_window: Option<(f64, f64)>,
    /// `ψ'(z+) − ψ'(z−)`; negative exactly when β > 0, which is what breaks
    /// global convexity in Case IV.
    pub kink_at_z: f64,
}

/// Sign of ψ'' at each probe point; probes equal to `z` are rejected.
pub fn convexity_signature(profile: &CaseProfile, probes: &[f64]) -> Result<ConvexityReport> {
    let z = profile.params.z;
    let pair = crate::special_functions::ExcessivePair::new(profile, z);
    let mut out = Vec::with_capacity(probes.len());
    for &x in probes {
        if x <= 0.0 || x == z {
            return Err(Error::Domain(format!("probe {x} must be positive and differ from z")));
        }
        let d2 = match pair.psi_d2(x)? {
            crate::special_functions::SecondDerivative::Value(v) => v,
            crate::special_functions::SecondDerivative::UndefinedAtZ { .. } => unreachable!(),
        };
        let sign = if d2 > 0.0 {
            CurvatureSign::Positive
        } else if d2 < 0.0 {
            CurvatureSign::Negative
        } else {
            CurvatureSign::Zero
        };
        out.push((x, d2, sign));
    }
    let concavity_window = profile.frak_c.map(|c| (z, z / c));
    let kink_at_z = pair.psi_dplus(z)? - pair.psi_dminus(z)?;
    Ok(ConvexityReport { probes: out, concavity_window, kink_at_z })
}

/// Classical perpetual call on a GBM (`β = 0`), used for limit checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbmReference {
    pub k: f64,
    pub n: f64,
    /// Exercise threshold `nK/(n − 1)`.
    pub boundary: f64,
}

impl GbmReference {
    pub fn new(r: f64, b: f64, sigma: f64, k: f64) -> Result<Self> {
        if r <= b {
            return Err(Error::AssumptionViolated { r, b });
        }
        let (_, n) = characteristic_roots(r, b, sigma);
        Ok(Self { k, n, boundary: n * k / (n - 1.0) })
    }

    pub fn value(&self, x: f64) -> f64 {
        if x >= self.boundary {
            x - self.k
        } else {
            (self.boundary - self.k) * crate::powers::ratio_pow(x, self.boundary, self.n)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference(beta: f64) -> SkewGbmParams {
        SkewGbmParams::new(0.1, 0.05, 0.3, 1.0, 1.0, beta)
    }

    #[test]
    fn roots_of_reference_params() {
        let (m, n) = characteristic_roots(0.1, 0.05, 0.3);
        assert!((m + 1.547_302_398_010_839).abs() < 1e-12);
        assert!((n - 1.436_191_286_899_728).abs() < 1e-12);
    }

    #[test]
    fn roots_factor_when_r_and_b_are_half_sigma_squared() {
        let (m, n) = characteristic_roots(0.045, 0.045, 0.3);
        assert!((m + 1.0).abs() < 1e-12 && (n - 1.0).abs() < 1e-12);
    }

    #[test]
    fn root_identities() {
        for &(r, b, s) in &[(0.1, 0.05, 0.3), (0.03, -0.2, 1.1), (0.5, 0.49, 0.05), (2.0, 1.0, -0.4)] {
            let (m, n) = characteristic_roots(r, b, s);
            let s2: f64 = s * s;
            for k in [m, n] {
                let q = 0.5 * s2 * k * k + (b - 0.5 * s2) * k - r;
                assert!(q.abs() < 1e-12 * (1.0 + r + s2 * k * k), "q = {q}");
            }
            assert!((n * m + 2.0 * r / s2).abs() <= 1e-12 * (2.0 * r / s2));
            assert!((n + m - 1.0 + 2.0 * b / s2).abs() <= 1e-12 * (1.0 + (2.0 * b / s2).abs()));
            assert!(((r - b * m) - 0.5 * s2 * m * (m - 1.0)).abs() <= 1e-12 * (r + (b * m).abs()));
            assert!(((r - b * n) - 0.5 * s2 * n * (n - 1.0)).abs() <= 1e-12 * (r + (b * n).abs()));
        }
    }

    #[test]
    fn case_two_reference() {
        let p = classify(&reference(-0.1)).unwrap();
        assert_eq!(p.case, SkewCase::II);
        assert!((p.beta_c + 0.164_079_547_972_128).abs() < 1e-12);
        assert!(p.frak_c.is_none());
    }

    #[test]
    fn case_one_for_nonpositive_drift() {
        let p = classify(&SkewGbmParams::new(0.1, -0.05, 0.3, 1.0, 1.0, -0.3)).unwrap();
        assert_eq!(p.case, SkewCase::I);
        let p = classify(&SkewGbmParams::new(0.1, 0.0, 0.3, 1.0, 1.0, -0.9)).unwrap();
        assert_eq!(p.case, SkewCase::I);
    }

    #[test]
    fn case_three_constants() {
        let p = classify(&reference(-0.5)).unwrap();
        assert_eq!(p.case, SkewCase::III);
        assert!((p.frak_c.unwrap() - 0.685_422_703_831_157).abs() < 1e-12);
        assert!((p.zc - 2.0).abs() < 1e-14);
        assert!((p.z0 - 3.292_572_158_209_755).abs() < 1e-12);
        assert!((p.zbeta.unwrap() - 1.302_245_028_251_742).abs() < 1e-12);
        assert!(p.k() < p.frak_c.unwrap() * p.zc);
    }

    #[test]
    fn case_four_and_errors() {
        assert_eq!(classify(&reference(0.3)).unwrap().case, SkewCase::IV);
        assert_eq!(classify(&reference(0.0)), Err(Error::DegenerateBeta));
        let bad = SkewGbmParams::new(0.05, 0.05, 0.3, 1.0, 1.0, 0.2);
        assert!(matches!(classify(&bad), Err(Error::AssumptionViolated { .. })));
        let bad = SkewGbmParams::new(0.1, 0.05, 0.3, 1.0, 1.0, 1.0);
        assert!(matches!(classify(&bad), Err(Error::InvalidParameter { name: "beta", .. })));
    }

    #[test]
    fn beta_c_boundary_goes_to_case_two_with_equal_points() {
        let p = classify(&reference(-0.5)).unwrap();
        let q = classify(&reference(p.beta_c)).unwrap();
        assert_eq!(q.case, SkewCase::II);
        assert!((q.zc - q.zbeta.unwrap()).abs() < 1e-12);
    }

    #[test]
    fn zbeta_undefined_when_ratio_equals_n() {
        // Pick β so that (1+β)/(1−β) = n exactly: β = (n−1)/(n+1).
        let (_, n) = characteristic_roots(0.1, 0.05, 0.3);
        let beta = (n - 1.0) / (n + 1.0);
        let p = classify(&reference(beta)).unwrap();
        let ratio = p.skew_ratio();
        assert_eq!(p.zbeta.is_none(), ratio == p.n);
        if let Some(zb) = p.zbeta {
            assert!(zb.abs() > 1e6);
        }
    }

    #[test]
    fn convexity_signature_by_case() {
        // Case I: convex right of z.
        let p = classify(&SkewGbmParams::new(0.1, -0.05, 0.3, 1.0, 1.0, -0.3)).unwrap();
        let rep = convexity_signature(&p, &[1.01, 2.0, 10.0]).unwrap();
        assert!(rep.probes.iter().all(|(_, _, s)| *s == CurvatureSign::Positive));
        // Case III: concave inside (z, z/𝔠).
        let p = classify(&reference(-0.5)).unwrap();
        let w = 1.0 / p.frak_c.unwrap();
        let rep = convexity_signature(&p, &[1.0 + 1e-6, 0.5 * (1.0 + w), w * 0.999, w * 1.001, 0.5]).unwrap();
        let signs: Vec<_> = rep.probes.iter().map(|p| p.2).collect();
        assert_eq!(
            signs,
            vec![
                CurvatureSign::Negative,
                CurvatureSign::Negative,
                CurvatureSign::Negative,
                CurvatureSign::Positive,
                CurvatureSign::Positive
            ]
        );
        assert_eq!(rep.concavity_window, Some((1.0, w)));
        assert!(rep.kink_at_z > 0.0);
        // Case IV: convex on each side, with a concave kink at z.
        let p = classify(&reference(0.3)).unwrap();
        let rep = convexity_signature(&p, &[0.5, 1.0 + 1e-6, 100.0]).unwrap();
        assert!(rep.probes.iter().all(|(_, _, s)| *s == CurvatureSign::Positive));
        assert!(rep.kink_at_z < 0.0);
        assert!(convexity_signature(&p, &[1.0]).is_err());
    }

    #[test]
    fn gbm_reference_is_continuous_at_boundary() {
        let g = GbmReference::new(0.1, 0.05, 0.3, 1.0).unwrap();
        let a = g.boundary;
        assert!((g.value(a * (1.0 - 1e-12)) - (a - 1.0)).abs() < 1e-10);
    }
}
