//! Perpetual American call on a skew geometric Brownian motion.
//!
//! The underlying solves `dX = bX dt + β dL^z(X) + σX dW`, where `L^z` is the
//! symmetric local time at the skew level `z`. For the payoff `(x − K)⁺` the
//! crate computes the value function in closed form for every parameter
//! regime, together with the stopping region, and provides two independent
//! numerical oracles (a projected-SOR obstacle solver and a Monte Carlo
//! simulator) used to cross-check the analytic answer.
//!
//! Module map:
//!
//! * [`model`]: parameter validation, characteristic roots, critical points
//!   and the four-way case classification.
//! * [`special_functions`]: the minimal excessive functions ψ, φ and the scale
//!   function.
//! * [`roots`]: bracketed scalar root finding.
//! * [`free_boundary`]: the auxiliary functions F, g, J, G, H and all
//!   free-boundary solves.
//! * [`value_function`]: regime dispatch and the piecewise closed-form value.
//! * [`vi_verifier`]: grid-based variational-inequality checks.
//! * [`numeric_oracles`]: finite-difference and Monte Carlo oracles.
//! * [`atlas`]: reference parameter sets, one per regime.

pub mod atlas;
pub mod error;
pub mod free_boundary;
pub mod model;
pub mod numeric_oracles;
pub mod roots;
pub mod special_functions;
pub mod value_function;
pub mod vi_verifier;

mod powers;

pub use error::{Error, Result};
pub use model::{classify, CaseProfile, GbmReference, SkewCase, SkewGbmParams};
pub use value_function::{solve, PiecewiseValueFunction, Regime, StoppingRegion};
pub use vi_verifier::{verify, GridConfig, VerificationReport};
