use std::path::PathBuf;

use clap::Args;
use skewgbm::{atlas, SkewGbmParams};

use crate::Failure;

/// Problem parameters. Precedence: `--figure`, then `--config`, then flags.
#[derive(Debug, Clone, Args)]
pub struct ParamArgs {
    /// Start from the preset reproducing figure N (4 to 13).
    #[arg(long, value_name = "N")]
    pub figure: Option<u8>,
    /// Flat JSON object {"r", "b", "sigma", "K", "z", "beta"}.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub r: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub sigma: Option<f64>,
    /// Strike.
    #[arg(long = "K", alias = "strike", allow_hyphen_values = true)]
    pub k: Option<f64>,
    /// Skew level.
    #[arg(long, allow_hyphen_values = true)]
    pub z: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
}

impl ParamArgs {
    pub fn resolve(&self) -> Result<SkewGbmParams, Failure> {
        self.merge(true)
    }

    /// `(r, b, σ, K)` for the classical model; z and beta may be absent.
    pub fn resolve_gbm(&self) -> Result<(f64, f64, f64, f64), Failure> {
        let p = self.merge(false)?;
        Ok((p.r, p.b, p.sigma, p.k))
    }

    fn merge(&self, skew: bool) -> Result<SkewGbmParams, Failure> {
        let mut base: Option<SkewGbmParams> = None;
        if let Some(n) = self.figure {
            base = Some(atlas::figure(n)?);
        }
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            let p: SkewGbmParams =
                serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            base = Some(p);
        }
        let pick = |flag: Option<f64>, from_base: Option<f64>, default: Option<f64>, name: &str| {
            flag.or(from_base).or(default).ok_or_else(|| Failure::Usage(format!("missing --{name}")))
        };
        Ok(SkewGbmParams {
            r: pick(self.r, base.map(|p| p.r), Some(atlas::R), "r")?,
            b: pick(self.b, base.map(|p| p.b), Some(atlas::B), "b")?,
            sigma: pick(self.sigma, base.map(|p| p.sigma), Some(atlas::SIGMA), "sigma")?,
            k: pick(self.k, base.map(|p| p.k), Some(atlas::K), "K")?,
            z: pick(self.z, base.map(|p| p.z), (!skew).then_some(f64::NAN), "z")?,
            beta: pick(self.beta, base.map(|p| p.beta), (!skew).then_some(f64::NAN), "beta")?,
        })
    }
}

/// Comma-separated list of floats.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatList(pub Vec<f64>);

pub fn parse_list(s: &str) -> Result<FloatList, String> {
    s.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"))).collect::<Result<_, _>>().map(FloatList)
}
