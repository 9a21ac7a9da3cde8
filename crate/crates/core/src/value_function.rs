//! Regime dispatch and the closed-form piecewise value function.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::free_boundary::{self, tangent_constants, GammaZetaOutcome};
use crate::model::{classify, CaseProfile, SkewCase, SkewGbmParams};
use crate::powers::pow;
use crate::roots::RootConfig;
use crate::special_functions::{ExcessivePair, ScaleFunction};

mod inf_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum Form {
    /// `cn·xⁿ + cm·xᵐ`.
    PowerPair { cn: f64, cm: f64 },
    /// `x − K`.
    Affine,
}

impl Form {
    fn value(&self, x: f64, n: f64, m: f64, k: f64) -> f64 {
        match *self {
            Form::PowerPair { cn, cm } => cn * pow(x, n) + cm * pow(x, m),
            Form::Affine => x - k,
        }
    }

    fn derivative(&self, x: f64, n: f64, m: f64) -> f64 {
        match *self {
            Form::PowerPair { cn, cm } => n * cn * pow(x, n - 1.0) + m * cm * pow(x, m - 1.0),
            Form::Affine => 1.0,
        }
    }

    fn second_derivative(&self, x: f64, n: f64, m: f64) -> f64 {
        match *self {
            Form::PowerPair { cn, cm } => n * (n - 1.0) * cn * pow(x, n - 2.0) + m * (m - 1.0) * cm * pow(x, m - 2.0),
            Form::Affine => 0.0,
        }
    }
}

/// One closed-form piece on `(lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub lo: f64,
    #[serde(with = "inf_null")]
    pub hi: f64,
    pub form: Form,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum Component {
    /// `[lo, hi]`, or the ray `[lo, ∞)` when `hi` is null.
    Interval {
        lo: f64,
        #[serde(with = "inf_null")]
        hi: f64,
    },
    Point { x: f64 },
}

impl Component {
    pub fn contains(&self, x: f64) -> bool {
        match *self {
            Component::Interval { lo, hi } => lo <= x && x <= hi,
            Component::Point { x: p } => x == p,
        }
    }

    pub fn lo(&self) -> f64 {
        match *self {
            Component::Interval { lo, .. } => lo,
            Component::Point { x } => x,
        }
    }

    pub fn hi(&self) -> f64 {
        match *self {
            Component::Interval { hi, .. } => hi,
            Component::Point { x } => x,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoppingRegion {
    pub components: Vec<Component>,
}

impl StoppingRegion {
    pub fn ray(a: f64) -> Self {
        Self { components: vec![Component::Interval { lo: a, hi: f64::INFINITY }] }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.components.iter().any(|c| c.contains(x))
    }

    /// Finite endpoints of all components, sorted, without duplicates.
    pub fn endpoints(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.components.iter().flat_map(|c| [c.lo(), c.hi()]).filter(|x| x.is_finite()).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// Stop above α(z).
    OneSidedAlpha,
    /// Stop above z.
    OneSidedAtZ,
    /// Stop above 𝔷₀.
    OneSidedZ0,
    /// Stop at z and above ξ(z).
    PointPlusRay,
    /// Stop on [𝔷₀, γ] and above ζ.
    TwoIntervals,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Regime::OneSidedAlpha => "OneSidedAlpha",
            Regime::OneSidedAtZ => "OneSidedAtZ",
            Regime::OneSidedZ0 => "OneSidedZ0",
            Regime::PointPlusRay => "PointPlusRay",
            Regime::TwoIntervals => "TwoIntervals",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum Constants {
    /// `v = Γψ(x; z)` below the threshold `a`.
    Threshold { a: f64, gamma: f64 },
    PointRay { xi: f64, c: f64, d: f64 },
    TwoIntervals { gamma: f64, zeta: f64, c_l: f64, d_l: f64, c_r: f64, d_r: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseValueFunction {
    pub params: SkewGbmParams,
    pub case: SkewCase,
    pub n: f64,
    pub m: f64,
    pub regime: Regime,
    pub constants: Constants,
    pub pieces: Vec<Piece>,
    pub stopping_region: StoppingRegion,
}

/// Which coefficient of a [`Form::PowerPair`] to perturb.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Power {
    N,
    M,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mutation {
    Coefficient { piece: usize, power: Power },
    /// Index into [`PiecewiseValueFunction::breakpoints`].
    Breakpoint { index: usize },
}

fn check_x(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("x = {x} must be positive and finite")))
    }
}

fn threshold_pieces(profile: &CaseProfile, z: f64, a: f64) -> (Vec<Piece>, f64) {
    let k = profile.k();
    let pair = ExcessivePair::new(profile, z);
    let gamma = (a - k) / pair.psi_at(a);
    let mut pieces = Vec::with_capacity(3);
    if a > z {
        pieces.push(Piece { lo: 0.0, hi: z, form: Form::PowerPair { cn: gamma, cm: 0.0 } });
        pieces.push(Piece { lo: z, hi: a, form: Form::PowerPair { cn: gamma * pair.a, cm: gamma * pair.bz() } });
    } else {
        pieces.push(Piece { lo: 0.0, hi: a, form: Form::PowerPair { cn: gamma, cm: 0.0 } });
    }
    pieces.push(Piece { lo: a, hi: f64::INFINITY, form: Form::Affine });
    (pieces, gamma)
}

fn build_threshold(profile: &CaseProfile, z: f64, a: f64, regime: Regime) -> PiecewiseValueFunction {
    let (pieces, gamma) = threshold_pieces(profile, z, a);
    PiecewiseValueFunction {
        params: profile.params,
        case: profile.case,
        n: profile.n,
        m: profile.m,
        regime,
        constants: Constants::Threshold { a, gamma },
        pieces,
        stopping_region: StoppingRegion::ray(a),
    }
}

fn build_alpha(profile: &CaseProfile, z: f64, cfg: &RootConfig) -> Result<PiecewiseValueFunction> {
    let a = free_boundary::alpha(profile, z, cfg)?;
    Ok(build_threshold(profile, z, a, Regime::OneSidedAlpha))
}

fn build_point_ray(profile: &CaseProfile, z: f64, cfg: &RootConfig) -> Result<PiecewiseValueFunction> {
    let k = profile.k();
    let xi = free_boundary::xi(profile, z, cfg)?;
    // The tangency fixes both constants in exact arithmetic. Taking D from the
    // value at z instead puts the rounding error at ξ, where xᵐ damps it.
    let (c, _) = tangent_constants(profile, xi);
    let d = (z - k - c * pow(z, profile.n)) * pow(z, -profile.m);
    let pieces = vec![
        Piece { lo: 0.0, hi: z, form: Form::PowerPair { cn: (z - k) * pow(z, -profile.n), cm: 0.0 } },
        Piece { lo: z, hi: xi, form: Form::PowerPair { cn: c, cm: d } },
        Piece { lo: xi, hi: f64::INFINITY, form: Form::Affine },
    ];
    Ok(PiecewiseValueFunction {
        params: profile.params,
        case: profile.case,
        n: profile.n,
        m: profile.m,
        regime: Regime::PointPlusRay,
        constants: Constants::PointRay { xi, c, d },
        pieces,
        stopping_region: StoppingRegion {
            components: vec![Component::Point { x: z }, Component::Interval { lo: xi, hi: f64::INFINITY }],
        },
    })
}

fn build_two_intervals(profile: &CaseProfile, z: f64, gamma: f64, zeta: f64) -> PiecewiseValueFunction {
    let (n, z0) = (profile.n, profile.z0);
    let (c_l, d_l) = tangent_constants(profile, gamma);
    let (c_r, d_r) = tangent_constants(profile, zeta);
    let pieces = vec![
        Piece { lo: 0.0, hi: z0, form: Form::PowerPair { cn: pow(z0, 1.0 - n) / n, cm: 0.0 } },
        Piece { lo: z0, hi: gamma, form: Form::Affine },
        Piece { lo: gamma, hi: z, form: Form::PowerPair { cn: c_l, cm: d_l } },
        Piece { lo: z, hi: zeta, form: Form::PowerPair { cn: c_r, cm: d_r } },
        Piece { lo: zeta, hi: f64::INFINITY, form: Form::Affine },
    ];
    PiecewiseValueFunction {
        params: profile.params,
        case: profile.case,
        n,
        m: profile.m,
        regime: Regime::TwoIntervals,
        constants: Constants::TwoIntervals { gamma, zeta, c_l, d_l, c_r, d_r },
        pieces,
        stopping_region: StoppingRegion {
            components: vec![
                Component::Interval { lo: z0, hi: gamma },
                Component::Interval { lo: zeta, hi: f64::INFINITY },
            ],
        },
    }
}

/// Solves with default root-finding tolerances.
pub fn solve(params: &SkewGbmParams) -> Result<PiecewiseValueFunction> {
    solve_with(params, &RootConfig::for_strike(params.k))
}

pub fn solve_with(params: &SkewGbmParams, cfg: &RootConfig) -> Result<PiecewiseValueFunction> {
    let profile = classify(params)?;
    solve_profile(&profile, cfg)
}

/// Regime of `profile.params.z` without assembling the value function.
pub fn regime_of(profile: &CaseProfile, cfg: &RootConfig) -> Result<Regime> {
    Ok(dispatch(profile, cfg)?.0)
}

enum Plan {
    Alpha,
    AtZ,
    Z0,
    PointRay,
    TwoIntervals(f64, f64),
}

fn dispatch(profile: &CaseProfile, cfg: &RootConfig) -> Result<(Regime, Plan)> {
    let z = profile.params.z;
    let (k, z0, zc) = (profile.k(), profile.z0, profile.zc);
    let plan = match profile.case {
        SkewCase::I | SkewCase::II => {
            let zb = profile.zbeta_positive().expect("cases I and II have a positive critical point");
            if z < zb {
                Plan::Alpha
            } else if z <= z0 {
                Plan::AtZ
            } else {
                Plan::Z0
            }
        }
        SkewCase::III => {
            let edge = profile.frak_c.expect("case III carries frak_c") * zc;
            if z <= k {
                Plan::Alpha
            } else if z < edge {
                if z <= free_boundary::z_minus(profile, cfg)? {
                    Plan::Alpha
                } else {
                    Plan::PointRay
                }
            } else if z < zc {
                Plan::PointRay
            } else if z <= z0 {
                Plan::AtZ
            } else {
                Plan::Z0
            }
        }
        SkewCase::IV => {
            let beyond_zbeta = profile.zbeta_positive().is_some_and(|zb| zb > z0 && z >= zb);
            if z <= z0 {
                Plan::Alpha
            } else if !beyond_zbeta && z <= free_boundary::z_plus(profile, cfg)? {
                Plan::Alpha
            } else {
                match free_boundary::gamma_zeta(profile, z, cfg)? {
                    GammaZetaOutcome::Solution(s) => Plan::TwoIntervals(s.gamma, s.zeta),
                    // Only reachable within rounding of z_⊕, where both forms agree.
                    GammaZetaOutcome::NoSolution { .. } => Plan::Alpha,
                }
            }
        }
    };
    let regime = match plan {
        Plan::Alpha => Regime::OneSidedAlpha,
        Plan::AtZ => Regime::OneSidedAtZ,
        Plan::Z0 => Regime::OneSidedZ0,
        Plan::PointRay => Regime::PointPlusRay,
        Plan::TwoIntervals(..) => Regime::TwoIntervals,
    };
    Ok((regime, plan))
}

pub fn solve_profile(profile: &CaseProfile, cfg: &RootConfig) -> Result<PiecewiseValueFunction> {
    let z = profile.params.z;
    let (_, plan) = dispatch(profile, cfg)?;
    Ok(match plan {
        Plan::Alpha => build_alpha(profile, z, cfg)?,
        Plan::AtZ => build_threshold(profile, z, z, Regime::OneSidedAtZ),
        Plan::Z0 => build_threshold(profile, z, profile.z0, Regime::OneSidedZ0),
        Plan::PointRay => build_point_ray(profile, z, cfg)?,
        Plan::TwoIntervals(gamma, zeta) => build_two_intervals(profile, z, gamma, zeta),
    })
}

/// Value and one-sided derivatives; see the inherent methods for details.
pub fn evaluate(vf: &PiecewiseValueFunction, x: f64) -> Result<f64> {
    vf.evaluate(x)
}

pub fn d_left(vf: &PiecewiseValueFunction, x: f64) -> Result<f64> {
    vf.d_left(x)
}

pub fn d_right(vf: &PiecewiseValueFunction, x: f64) -> Result<f64> {
    vf.d_right(x)
}

pub fn stopping_rule(vf: &PiecewiseValueFunction) -> StoppingRegion {
    vf.stopping_region.clone()
}

impl PiecewiseValueFunction {
    pub fn k(&self) -> f64 {
        self.params.k
    }

    /// Piece owning `x` from the left, i.e. `lo < x ≤ hi`.
    pub fn piece_left(&self, x: f64) -> &Piece {
        self.pieces.iter().find(|p| p.lo < x && x <= p.hi).unwrap_or_else(|| self.pieces.last().expect("nonempty"))
    }

    /// Piece owning `x` from the right, i.e. `lo ≤ x < hi`.
    pub fn piece_right(&self, x: f64) -> &Piece {
        self.pieces.iter().find(|p| p.lo <= x && x < p.hi).unwrap_or_else(|| self.pieces.last().expect("nonempty"))
    }

    pub fn evaluate(&self, x: f64) -> Result<f64> {
        check_x(x)?;
        Ok(self.piece_left(x).form.value(x, self.n, self.m, self.k()))
    }

    pub fn d_left(&self, x: f64) -> Result<f64> {
        check_x(x)?;
        Ok(self.piece_left(x).form.derivative(x, self.n, self.m))
    }

    pub fn d_right(&self, x: f64) -> Result<f64> {
        check_x(x)?;
        Ok(self.piece_right(x).form.derivative(x, self.n, self.m))
    }

    /// `½σ²x²v'' + bxv' − rv` on a given piece.
    pub fn generator_on(&self, piece: &Piece, x: f64) -> f64 {
        let SkewGbmParams { r, b, .. } = self.params;
        let s2 = self.params.sigma2();
        match piece.form {
            Form::PowerPair { cn, cm } => {
                let q = |p: f64| 0.5 * s2 * p * (p - 1.0) + b * p - r;
                cn * q(self.n) * pow(x, self.n) + cm * q(self.m) * pow(x, self.m)
            }
            Form::Affine => b * x - r * (x - self.k()),
        }
    }

    pub fn second_derivative_on(&self, piece: &Piece, x: f64) -> f64 {
        piece.form.second_derivative(x, self.n, self.m)
    }

    pub fn value_on(&self, piece: &Piece, x: f64) -> f64 {
        piece.form.value(x, self.n, self.m, self.k())
    }

    pub fn derivative_on(&self, piece: &Piece, x: f64) -> f64 {
        piece.form.derivative(x, self.n, self.m)
    }

    /// Finite piece boundaries in increasing order.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.pieces.iter().map(|p| p.hi).filter(|h| h.is_finite()).collect()
    }

    /// Every single-constant perturbation the representation admits.
    pub fn mutations(&self) -> Vec<Mutation> {
        let mut out = Vec::new();
        for (i, p) in self.pieces.iter().enumerate() {
            if let Form::PowerPair { cn, cm } = p.form {
                if cn != 0.0 {
                    out.push(Mutation::Coefficient { piece: i, power: Power::N });
                }
                if cm != 0.0 {
                    out.push(Mutation::Coefficient { piece: i, power: Power::M });
                }
            }
        }
        out.extend((0..self.breakpoints().len()).map(|index| Mutation::Breakpoint { index }));
        out
    }

    /// Copy with one constant scaled by `1 + rel`. A moved breakpoint is moved
    /// in both adjacent pieces and in the stopping region.
    pub fn mutated(&self, mutation: Mutation, rel: f64) -> Result<Self> {
        let mut out = self.clone();
        match mutation {
            Mutation::Coefficient { piece, power } => {
                let p = out
                    .pieces
                    .get_mut(piece)
                    .ok_or_else(|| Error::Domain(format!("no piece {piece}")))?;
                match (&mut p.form, power) {
                    (Form::PowerPair { cn, .. }, Power::N) => *cn *= 1.0 + rel,
                    (Form::PowerPair { cm, .. }, Power::M) => *cm *= 1.0 + rel,
                    (Form::Affine, _) => return Err(Error::Domain(format!("piece {piece} has no coefficients"))),
                }
            }
            Mutation::Breakpoint { index } => {
                let old = *self
                    .breakpoints()
                    .get(index)
                    .ok_or_else(|| Error::Domain(format!("no breakpoint {index}")))?;
                let new = old * (1.0 + rel);
                for p in &mut out.pieces {
                    if p.lo == old {
                        p.lo = new;
                    }
                    if p.hi == old {
                        p.hi = new;
                    }
                }
                for c in &mut out.stopping_region.components {
                    match c {
                        Component::Interval { lo, hi } => {
                            if *lo == old {
                                *lo = new;
                            }
                            if *hi == old {
                                *hi = new;
                            }
                        }
                        Component::Point { x } => {
                            if *x == old {
                                *x = new;
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("value function serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Domain(format!("bad value function JSON: {e}")))
    }
}

/// Derivative jumps at `z` measured against the scale density and against ψ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothFitGap {
    /// `v'₊(z)/p'₊(z) − v'₋(z)/p'₋(z)` from the assembled value function.
    pub gap_p: f64,
    /// `v'₊(z)/ψ'₊(z) − v'₋(z)/ψ'₋(z)` from the assembled value function.
    pub gap_psi: f64,
    pub closed_p: f64,
    pub closed_psi: f64,
}

/// Cases I/II with `z ∈ [𝔷_β, 𝔷₀]`, where smooth fit fails at `z`.
pub fn smooth_fit_gap(params: &SkewGbmParams) -> Result<SmoothFitGap> {
    let profile = classify(params)?;
    if !matches!(profile.case, SkewCase::I | SkewCase::II) {
        return Err(Error::CaseMismatch { expected: "I or II", found: profile.case });
    }
    let z = params.z;
    let zb = profile.zbeta_positive().expect("cases I and II have a positive critical point");
    if !(zb <= z && z <= profile.z0) {
        return Err(Error::Domain(format!("smooth-fit gap needs z in [{zb}, {}], got {z}", profile.z0)));
    }
    let vf = solve_profile(&profile, &RootConfig::for_strike(params.k))?;
    let scale = ScaleFunction::new(params);
    let pair = ExcessivePair::new(&profile, z);
    let (vl, vr) = (vf.d_left(z)?, vf.d_right(z)?);
    let (pl, pr) = (scale.density_left(z)?, scale.density(z)?);
    let (sl, sr) = (pair.psi_dminus(z)?, pair.psi_dplus(z)?);
    let lead = -(profile.n - profile.skew_ratio()) * (z - zb);
    Ok(SmoothFitGap {
        gap_p: vr / pr - vl / pl,
        gap_psi: vr / sr - vl / sl,
        closed_p: lead / (z * pl),
        closed_psi: lead / (profile.n * pow(z, profile.n)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(beta: f64, z: f64) -> SkewGbmParams {
        SkewGbmParams::new(0.1, 0.05, 0.3, 1.0, z, beta)
    }

    fn continuity_defect(vf: &PiecewiseValueFunction) -> f64 {
        vf.breakpoints()
            .iter()
            .map(|&x| (vf.value_on(vf.piece_left(x), x) - vf.value_on(vf.piece_right(x), x)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn dispatch_table() {
        let cases = [
            (-0.1, 1.0, Regime::OneSidedAlpha),
            (-0.1, 2.8, Regime::OneSidedAtZ),
            (-0.1, 4.0, Regime::OneSidedZ0),
            (-0.5, 0.8, Regime::OneSidedAlpha),
            (-0.5, 1.6, Regime::PointPlusRay),
            (-0.5, 2.5, Regime::OneSidedAtZ),
            (-0.5, 4.0, Regime::OneSidedZ0),
            (0.3, 1.0, Regime::OneSidedAlpha),
            (0.3, 8.0, Regime::TwoIntervals),
            (0.1, 10.0, Regime::TwoIntervals),
        ];
        for (beta, z, regime) in cases {
            let vf = solve(&params(beta, z)).unwrap();
            assert_eq!(vf.regime, regime, "beta {beta}, z {z}");
            assert!(continuity_defect(&vf) < 1e-12, "beta {beta}, z {z}");
        }
    }

    #[test]
    fn stopping_regions() {
        let vf = solve(&params(-0.5, 1.6)).unwrap();
        assert_eq!(vf.stopping_region.components[0], Component::Point { x: 1.6 });
        assert!(vf.stopping_region.contains(1.6) && !vf.stopping_region.contains(1.7));
        let vf = solve(&params(0.3, 8.0)).unwrap();
        let c = &vf.stopping_region.components;
        assert_eq!(c.len(), 2);
        let z0 = classify(&params(0.3, 8.0)).unwrap().z0;
        assert_eq!(c[0].lo(), z0);
        assert!(c[0].hi() < 8.0 && c[1].lo() > 8.0 && c[1].hi().is_infinite());
        let vf = solve(&params(-0.1, 1.0)).unwrap();
        assert_eq!(stopping_rule(&vf).components.len(), 1);
    }

    #[test]
    fn smooth_fit_at_alpha_and_kink_at_z() {
        let vf = solve(&params(-0.1, 1.0)).unwrap();
        let Constants::Threshold { a, .. } = vf.constants else { panic!() };
        assert!((vf.d_left(a).unwrap() - 1.0).abs() < 1e-10);
        assert_eq!(vf.d_right(a).unwrap(), 1.0);
        let vf = solve(&params(-0.1, 2.8)).unwrap();
        assert!((vf.d_left(2.8).unwrap() - vf.d_right(2.8).unwrap()).abs() > 1e-3);
    }

    #[test]
    fn point_plus_ray_tangency() {
        let vf = solve(&params(-0.5, 1.6)).unwrap();
        let Constants::PointRay { xi, c, d } = vf.constants else { panic!() };
        // ξ < 𝔷₀, so the xᵐ coefficient is negative.
        assert!(c > 0.0 && d < 0.0);
        assert!((vf.d_left(xi).unwrap() - 1.0).abs() < 1e-10);
        assert!((vf.evaluate(1.6).unwrap() - 0.6).abs() < 1e-14);
    }

    #[test]
    fn value_above_payoff() {
        for (beta, z) in [(-0.1, 1.0), (-0.5, 1.6), (0.3, 8.0), (0.3, 1.0)] {
            let vf = solve(&params(beta, z)).unwrap();
            for i in 0..400 {
                let x = 1e-3 * pow(1e5, i as f64 / 399.0);
                let v = vf.evaluate(x).unwrap();
                assert!(v > 0.0 && v >= (x - 1.0).max(0.0) - 1e-12, "beta {beta}, x {x}");
            }
        }
    }

    #[test]
    fn json_round_trip() {
        for (beta, z) in [(-0.5, 1.6), (0.3, 8.0)] {
            let vf = solve(&params(beta, z)).unwrap();
            let s = vf.to_json();
            assert!(s.contains("\"hi\":null"));
            assert_eq!(PiecewiseValueFunction::from_json(&s).unwrap(), vf);
        }
    }

    #[test]
    fn mutations_move_breakpoints_consistently() {
        let vf = solve(&params(-0.5, 1.6)).unwrap();
        let m = vf.mutated(Mutation::Breakpoint { index: 0 }, 1e-3).unwrap();
        assert_eq!(m.pieces[0].hi, 1.6 * 1.001);
        assert_eq!(m.pieces[1].lo, 1.6 * 1.001);
        assert_eq!(m.stopping_region.components[0], Component::Point { x: 1.6 * 1.001 });
        assert!(vf.mutations().len() >= 4);
    }

    #[test]
    fn smooth_fit_gap_endpoints() {
        let p = classify(&params(-0.1, 1.0)).unwrap();
        let zb = p.zbeta.unwrap();
        let g = smooth_fit_gap(&params(-0.1, zb)).unwrap();
        assert_eq!(g.closed_p, 0.0);
        assert!(g.gap_p.abs() < 1e-12 && g.gap_psi.abs() < 1e-12);
        let g = smooth_fit_gap(&params(-0.1, p.z0)).unwrap();
        let expect = 2.0 * -0.1 / ((p.n - 1.0) * 1.1 * pow(p.z0, p.n));
        assert!((g.closed_psi - expect).abs() < 1e-14);
        assert!((g.gap_psi - g.closed_psi).abs() < 1e-12);
        let g = smooth_fit_gap(&params(-0.1, 0.5 * (zb + p.z0))).unwrap();
        assert!(g.gap_p < 0.0 && (g.gap_p - g.closed_p).abs() < 1e-12);
        assert!(smooth_fit_gap(&params(-0.1, 1.0)).is_err());
        assert!(smooth_fit_gap(&params(0.3, 4.0)).is_err());
    }

    #[test]
    fn near_zero_beta_matches_gbm() {
        let reference = crate::model::GbmReference::new(0.1, 0.05, 0.3, 1.0).unwrap();
        for beta in [1e-7, -1e-7] {
            let vf = solve(&params(beta, 1.0)).unwrap();
            for &x in &[0.1, 1.0, 3.0, 5.0] {
                let (v, w) = (vf.evaluate(x).unwrap(), reference.value(x));
                assert!((v - w).abs() <= 1e-5 * w, "beta {beta}, x {x}: {v} vs {w}");
            }
        }
    }
}
