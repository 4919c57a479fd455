//! The probability space: reproducible random-dopant events, the
//! coefficient fields they induce, and level-coupled evaluation.

mod dopants;
mod export;
mod realize;
mod rng;
mod sampler;

pub use dopants::{dopant_count, draw_dopants, DopantSample};
pub use export::write_samples_csv;
pub use realize::{realize_fields, DopantModel};
pub use rng::{sample_rng, sample_seed, RETRY_STREAM_OFFSET};
pub use sampler::{coupled_solve, CoupledSample, DeviceModel, DeviceSampler, Level, SampleOutcome};

use thiserror::Error;

use crate::fem::FemError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StochasticError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("sampling error: {0}")]
    Sampling(String),
    #[error("solve failed at h = {h} for seed {seed}: {source}")]
    Solve { h: f64, seed: u64, source: FemError },
    #[error("level {level}: {source}")]
    Level { level: usize, source: Box<StochasticError> },
}
