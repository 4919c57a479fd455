//! Cost-optimal MC and MLMC hierarchies.
//!
//! The work-minimisation problems are posed in the variables
//! `ln M_ℓ, ln h_0, ln r_ℓ`, where work and error bound are sums of
//! exponentials of affine functions, and solved by a primal-dual
//! log-barrier method with exact Hessians.

mod ipm;
mod levels;
mod posy;
mod problems;

pub use ipm::{interior_point_solve, IpDiagnostics, IpOptions, IpState, KktResiduals, NlpProblem, TraceEntry};
pub use levels::{select_levels, write_level_curve_csv, LevelPoint, LevelSweep};
pub use posy::{ExpTerm, LogConstraint, LogPosyProblem};
pub use problems::{
    floor_samples, optimize, optimize_mc, optimize_mlmc_free, optimize_mlmc_geometric, ContinuousOptimum,
    OptimizerOptions, Optimum, Variant,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizerError {
    #[error("invalid optimization input: {0}")]
    Config(String),
    #[error("tolerance {epsilon:e} is at or below the error floor C1·ξ^α = {floor:e}")]
    Infeasible { epsilon: f64, floor: f64 },
    #[error("interior-point method did not converge after {iterations} iterations (residual {residual:e}): {message}")]
    NonConvergence { iterations: usize, residual: f64, message: String },
}
