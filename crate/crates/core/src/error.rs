use thiserror::Error;

use crate::model::SkewCase;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// `r <= b`: the value function is identically +∞.
    #[error("value function is infinite: r = {r} must exceed b = {b}")]
    AssumptionViolated { r: f64, b: f64 },

    /// `β = 0` is the classical GBM; use [`crate::GbmReference`] instead.
    #[error("beta = 0 is outside the skew model; use the classical GBM reference pricer")]
    DegenerateBeta,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no sign change for {what} on [{lo}, {hi}]")]
    BracketFailure { what: &'static str, lo: f64, hi: f64 },

    #[error("root finder for {what} did not converge in {iterations} iterations")]
    RootNotConverged { what: &'static str, iterations: usize },

    #[error("operation requires case {expected}, parameters are in case {found}")]
    CaseMismatch { expected: &'static str, found: SkewCase },

    #[error("projected SOR did not converge after {sweeps} sweeps (last update {residual:e})")]
    NonConvergence { sweeps: usize, residual: f64 },

    #[error("adaptive quadrature failed on [{lo}, {hi}]")]
    Quadrature { lo: f64, hi: f64 },
}
