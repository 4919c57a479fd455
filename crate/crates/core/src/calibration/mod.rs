//! Fits of the error model and the cost model from solver runs.

mod cost;
mod export;
mod fit;
mod study;

pub use cost::{CostModel, CostTerm};
pub use export::{write_error_csv, write_timing_csv, write_variance_csv};
pub use fit::{
    fit_cost_model, fit_discretization, fit_level_variance, fit_power_law, ComponentTimings, CostFit,
    DiscretizationFit, LevelVarianceFit, PowerFit, TimingRun, TIMER_RESOLUTION,
};
pub use study::{
    assemble_report, calibrate, discretization_study, timing_components, timing_study, variance_study,
    CalibrationConfig, CalibrationReport, DiscretizationStudy, ErrorRow, TimingRow, TimingStudy, VarianceStudy,
    COMPONENTS,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalibrationError {
    #[error("data error: {0}")]
    Data(String),
    #[error("measurement error: {0}")]
    Measurement(String),
    #[error("solver error: {0}")]
    Solver(String),
}
