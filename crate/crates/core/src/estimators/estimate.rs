use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::MlmcPlan;
use super::stats::{mean, sample_sigma};
use super::EstimationError;
use crate::stochastic::{sample_seed, RETRY_STREAM_OFFSET};

/// QoI of the random event identified by `seed`, discretized with mesh size `h`.
pub trait Sampler: Sync {
    fn sample(&self, h: f64, seed: u64) -> Result<f64, String>;
}

impl<F> Sampler for F
where
    F: Fn(f64, u64) -> Result<f64, String> + Sync,
{
    fn sample(&self, h: f64, seed: u64) -> Result<f64, String> {
        self(h, seed)
    }
}

/// How per-level seeds are derived. `Independent` draws disjoint events on
/// every level; `Shared` reuses the level-0 events everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SeedMode {
    #[default]
    Independent,
    Shared,
}

impl SeedMode {
    fn stream(self, level: usize) -> u64 {
        match self {
            SeedMode::Independent => level as u64,
            SeedMode::Shared => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub h: f64,
    pub samples: u64,
    pub mean: f64,
    pub sigma: f64,
    pub wall_clock: f64,
    #[serde(skip)]
    pub values: Vec<f64>,
}

/// Statistics of one MLMC level. For `level > 0` `mean` and `sigma` refer
/// to the differences `Q_ℓ - Q_{ℓ-1}`; `mean_fine`/`sigma_fine` to `Q_ℓ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub level: usize,
    pub h: f64,
    pub samples: u64,
    pub mean: f64,
    pub sigma: f64,
    pub mean_fine: f64,
    pub sigma_fine: f64,
    pub wall_clock: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlmcEstimate {
    pub plan: MlmcPlan,
    pub mean: f64,
    /// `sqrt(Σ σ_ℓ² / M_ℓ)`.
    pub statistical_error: f64,
    pub levels: Vec<LevelStats>,
}

fn with_retry<T>(global: u64, stream: u64, index: u64, f: impl Fn(u64) -> Result<T, String>) -> Result<T, String> {
    f(sample_seed(global, stream, index)).or_else(|first| {
        f(sample_seed(global, stream + RETRY_STREAM_OFFSET, index))
            .map_err(|second| format!("{first}; retry with reserved seed failed: {second}"))
    })
}

fn collect_ordered<T: Send>(results: Vec<Result<T, String>>, level: usize) -> Result<Vec<T>, EstimationError> {
    let mut out = Vec::with_capacity(results.len());
    for (index, r) in results.into_iter().enumerate() {
        match r {
            Ok(x) => out.push(x),
            Err(message) => return Err(EstimationError::Sample { level, index: index as u64, message }),
        }
    }
    Ok(out)
}

/// Plain Monte-Carlo mean of `samples` independent evaluations at `h`.
pub fn mc_estimate<S: Sampler + ?Sized>(
    sampler: &S,
    h: f64,
    samples: u64,
    global_seed: u64,
) -> Result<McEstimate, EstimationError> {
    if samples == 0 {
        return Err(EstimationError::Plan("M must be at least 1".into()));
    }
    let t0 = Instant::now();
    let results: Vec<Result<f64, String>> =
        (0..samples).into_par_iter().map(|i| with_retry(global_seed, 0, i, |seed| sampler.sample(h, seed))).collect();
    let values = collect_ordered(results, 0)?;
    Ok(McEstimate {
        h,
        samples,
        mean: mean(&values),
        sigma: sample_sigma(&values),
        wall_clock: t0.elapsed().as_secs_f64(),
        values,
    })
}

/// Telescoping MLMC estimator. Level `ℓ ≥ 1` evaluates the same event on
/// `h_ℓ` and `h_{ℓ-1}`.
pub fn mlmc_estimate<S: Sampler + ?Sized>(
    sampler: &S,
    plan: &MlmcPlan,
    global_seed: u64,
    mode: SeedMode,
) -> Result<MlmcEstimate, EstimationError> {
    plan.validate()?;
    let h = plan.mesh_sizes();
    let mut levels = Vec::with_capacity(plan.levels + 1);
    for (l, &m) in plan.samples.iter().enumerate() {
        let t0 = Instant::now();
        let stream = mode.stream(l);
        let results: Vec<Result<(f64, f64), String>> = (0..m)
            .into_par_iter()
            .map(|i| {
                with_retry(global_seed, stream, i, |seed| {
                    let fine = sampler.sample(h[l], seed)?;
                    let coarse = if l == 0 { 0.0 } else { sampler.sample(h[l - 1], seed)? };
                    Ok((fine, coarse))
                })
            })
            .collect();
        let pairs = collect_ordered(results, l)?;
        let diffs: Vec<f64> = pairs.iter().map(|(f, c)| f - c).collect();
        let fine: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        levels.push(LevelStats {
            level: l,
            h: h[l],
            samples: m,
            mean: mean(&diffs),
            sigma: sample_sigma(&diffs),
            mean_fine: mean(&fine),
            sigma_fine: sample_sigma(&fine),
            wall_clock: t0.elapsed().as_secs_f64(),
        });
    }
    let total = super::stats::neumaier_sum(levels.iter().map(|s| s.mean));
    let var = super::stats::neumaier_sum(levels.iter().map(|s| s.sigma * s.sigma / s.samples as f64));
    Ok(MlmcEstimate { plan: plan.clone(), mean: total, statistical_error: var.sqrt(), levels })
}
