//! Independent numerical solutions used to cross-check the closed form.
//!
//! * [`fd`]: projected SOR on the log-space obstacle problem with a discrete
//!   skew interface row.
//! * [`mc`]: Monte Carlo over a local-time-free transform of `ln X`.

pub mod fd;
pub mod mc;

pub use fd::{fd_solve, FdComparison, FdConfig, FdSolution};
pub use mc::{excursion_statistic, mc_estimate, simulate_path, ExcursionStatistic, McConfig, McEstimate};
