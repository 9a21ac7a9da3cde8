//! Reference parameter sets, one per qualitative shape of the value function.
//!
//! All sets share `r = 0.1`, `b = 0.05`, `σ = 0.3`, `K = 1` and differ in the
//! skew parameter and the skew level. Shapes are keyed by the figure numbers
//! 4 to 13 of the standard presentation; 12 is the boundary case `z = z_⊕` of 10.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::free_boundary::z_plus;
use crate::model::{classify, SkewGbmParams};
use crate::roots::RootConfig;
use crate::value_function::Regime;

pub const R: f64 = 0.1;
pub const B: f64 = 0.05;
pub const SIGMA: f64 = 0.3;
pub const K: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtlasEntry {
    pub figure: u8,
    pub regime: Regime,
    pub params: SkewGbmParams,
}

fn base(beta: f64, z: f64) -> SkewGbmParams {
    SkewGbmParams::new(R, B, SIGMA, K, z, beta)
}

/// Parameters reproducing the shape of figure `n` (4 to 13).
pub fn figure(n: u8) -> Result<SkewGbmParams> {
    Ok(match n {
        4 => base(-0.1, 1.0),
        5 => base(-0.1, 2.8),
        6 => base(-0.1, 4.0),
        7 => base(-0.5, 0.8),
        8 => base(-0.5, 2.5),
        9 => base(-0.5, 4.0),
        10 => base(0.3, 1.0),
        11 => base(-0.5, 1.6),
        12 => {
            let p = base(0.3, 1.0);
            let zp = z_plus(&classify(&p)?, &RootConfig::for_strike(K))?;
            p.with_z(zp)
        }
        13 => base(0.3, 8.0),
        _ => {
            return Err(Error::InvalidParameter { name: "figure", reason: format!("{n} is not in 4..=13") });
        }
    })
}

/// The nine distinct regimes (figure 12 folded into 10).
pub fn atlas() -> Vec<AtlasEntry> {
    use Regime::*;
    [
        (4, OneSidedAlpha),
        (5, OneSidedAtZ),
        (6, OneSidedZ0),
        (7, OneSidedAlpha),
        (11, PointPlusRay),
        (8, OneSidedAtZ),
        (9, OneSidedZ0),
        (10, OneSidedAlpha),
        (13, TwoIntervals),
    ]
    .into_iter()
    .map(|(figure, regime)| AtlasEntry { figure, regime, params: self::figure(figure).expect("fixed presets are valid") })
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SkewCase;
    use crate::value_function::solve;

    #[test]
    fn presets_land_in_their_regimes() {
        for e in atlas() {
            let vf = solve(&e.params).unwrap();
            assert_eq!(vf.regime, e.regime, "figure {}", e.figure);
        }
        let p12 = figure(12).unwrap();
        assert_eq!(classify(&p12).unwrap().case, SkewCase::IV);
        assert!(figure(3).is_err());
    }

    #[test]
    fn cases_match_figures() {
        let case = |n| classify(&figure(n).unwrap()).unwrap().case;
        assert_eq!(case(4), SkewCase::II);
        assert_eq!(case(7), SkewCase::III);
        assert_eq!(case(13), SkewCase::IV);
    }
}
