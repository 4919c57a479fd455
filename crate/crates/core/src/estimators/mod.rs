//! Monte-Carlo and multilevel Monte-Carlo estimators, sample statistics and
//! the a-priori RMSE bounds that drive the hierarchy optimizer.

mod estimate;
mod model;
mod stats;

pub use estimate::{mc_estimate, mlmc_estimate, LevelStats, McEstimate, MlmcEstimate, Sampler, SeedMode};
pub use model::{
    mesh_sizes, rmse_bound_mc, rmse_bound_mlmc, rmse_bound_mlmc_continuous, ErrorModel, McPlan, MlmcPlan, Ratios,
};
pub use stats::{fit_sigma, mean, neumaier_sum, sample_sigma};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimationError {
    #[error("statistics error: {0}")]
    Statistics(String),
    #[error("invalid plan: {0}")]
    Plan(String),
    #[error("sample {index} on level {level} failed: {message}")]
    Sample { level: usize, index: u64, message: String },
}
