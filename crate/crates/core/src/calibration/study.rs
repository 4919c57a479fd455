use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::{
    fit_cost_model, fit_discretization, fit_level_variance, ComponentTimings, CostFit, DiscretizationFit,
    LevelVarianceFit, TimingRun, TIMER_RESOLUTION,
};
use super::{CalibrationError, CostModel};
use crate::estimators::{mlmc_estimate, neumaier_sum, ErrorModel, LevelStats, MlmcPlan, Ratios, SeedMode};
use crate::fem::{QoiKind, Timings};
use crate::stochastic::{sample_seed, DeviceSampler};

const DISCRETIZATION_STREAM: u64 = 1 << 40;
const VARIANCE_STREAM: u64 = 1 << 41;
const TIMING_STREAM: u64 = 1 << 42;

/// Work components in the order of [`Timings::as_array`], with the number
/// of executions per solve.
pub const COMPONENTS: [(&str, f64); 4] =
    [("poisson_assembly", 1.0), ("poisson_solve", 1.0), ("dd_assembly", 2.0), ("dd_solve", 2.0)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConfig {
    pub mesh_sizes: Vec<f64>,
    /// Defaults to half the smallest calibrated mesh size.
    pub reference_h: Option<f64>,
    pub error_seeds: usize,
    pub variance_h0: f64,
    pub variance_ratio: f64,
    pub variance_levels: usize,
    pub variance_samples: u64,
    pub timing_mesh_sizes: Vec<f64>,
    pub timing_samples: u64,
    pub max_timing_samples: u64,
    pub repetitions: usize,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            mesh_sizes: vec![5.0, 2.5, 1.25, 0.625],
            reference_h: None,
            error_seeds: 16,
            variance_h0: 5.0,
            variance_ratio: 2.0,
            variance_levels: 3,
            variance_samples: 64,
            timing_mesh_sizes: vec![5.0, 2.5, 1.25, 0.625],
            timing_samples: 4,
            max_timing_samples: 256,
            repetitions: 3,
        }
    }
}

impl CalibrationConfig {
    pub fn reference(&self) -> f64 {
        self.reference_h.unwrap_or_else(|| 0.5 * self.mesh_sizes.iter().cloned().fold(f64::INFINITY, f64::min))
    }

    pub fn validate(&self) -> Result<(), CalibrationError> {
        let bad = |m: &str| Err(CalibrationError::Data(m.into()));
        if self.mesh_sizes.len() < 3 || self.mesh_sizes.iter().any(|h| !(*h > 0.0)) {
            return bad("need at least 3 positive calibration mesh sizes");
        }
        let h_min = self.mesh_sizes.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(self.reference() > 0.0 && self.reference() < h_min) {
            return bad("the reference mesh must be finer than every calibration mesh");
        }
        if self.error_seeds == 0 || self.variance_samples < 2 || self.timing_samples == 0 || self.repetitions == 0 {
            return bad("seed, sample and repetition counts must be positive (at least 2 variance samples)");
        }
        if self.variance_levels < 3 || !(self.variance_ratio > 1.0) || !(self.variance_h0 > 0.0) {
            return bad("the variance study needs at least 3 difference levels and a ratio > 1");
        }
        if self.timing_mesh_sizes.len() < 3 || self.timing_mesh_sizes.iter().any(|h| !(*h > 0.0)) {
            return bad("need at least 3 positive timing mesh sizes");
        }
        if self.max_timing_samples < self.timing_samples {
            return bad("max_timing_samples must be at least timing_samples");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub h: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationStudy {
    pub reference_h: f64,
    pub seeds: Vec<u64>,
    pub rows: Vec<ErrorRow>,
    /// `qoi[seed][j]` for the calibration meshes followed by the reference.
    pub qoi: Vec<Vec<f64>>,
    pub fit: DiscretizationFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceStudy {
    pub plan: MlmcPlan,
    pub levels: Vec<LevelStats>,
    pub fit: LevelVarianceFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub label: String,
    pub multiplicity: f64,
    pub h: f64,
    pub samples: u64,
    pub median: f64,
    pub seconds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingStudy {
    pub rows: Vec<TimingRow>,
    pub fit: CostFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub error_model: ErrorModel,
    pub cost_model: CostModel,
    pub qoi: QoiKind,
    pub seed: u64,
    pub discretization: DiscretizationStudy,
    pub variance: VarianceStudy,
    pub timing: TimingStudy,
}

fn solver_error(h: f64, seed: u64, e: impl std::fmt::Display) -> CalibrationError {
    CalibrationError::Solver(format!("h = {h}, seed = {seed}: {e}"))
}

/// Mean over seeds of `|Q_h − Q_ref|` for each calibration mesh.
pub fn discretization_study(
    sampler: &DeviceSampler,
    cfg: &CalibrationConfig,
    global_seed: u64,
) -> Result<DiscretizationStudy, CalibrationError> {
    cfg.validate()?;
    let reference_h = cfg.reference();
    let mut meshes = cfg.mesh_sizes.clone();
    meshes.push(reference_h);
    let seeds: Vec<u64> =
        (0..cfg.error_seeds as u64).map(|i| sample_seed(global_seed, DISCRETIZATION_STREAM, i)).collect();
    let qoi: Vec<Vec<f64>> = seeds
        .par_iter()
        .map(|&seed| {
            meshes
                .iter()
                .map(|&h| sampler.solve(h, seed).map(|o| o.qoi).map_err(|e| solver_error(h, seed, e)))
                .collect::<Result<Vec<f64>, _>>()
        })
        .collect::<Result<_, _>>()?;
    let r = meshes.len() - 1;
    let rows: Vec<ErrorRow> = cfg
        .mesh_sizes
        .iter()
        .enumerate()
        .map(|(j, &h)| ErrorRow {
            h,
            error: neumaier_sum(qoi.iter().map(|q| (q[j] - q[r]).abs())) / seeds.len() as f64,
        })
        .collect();
    let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.h, r.error)).collect();
    let fit = fit_discretization(&pairs)?;
    Ok(DiscretizationStudy { reference_h, seeds, rows, qoi, fit })
}

/// Level-0 and level-difference standard deviations on a geometric
/// hierarchy with equal sample counts.
pub fn variance_study(
    sampler: &DeviceSampler,
    cfg: &CalibrationConfig,
    global_seed: u64,
) -> Result<VarianceStudy, CalibrationError> {
    cfg.validate()?;
    let plan = MlmcPlan {
        levels: cfg.variance_levels,
        h0: cfg.variance_h0,
        ratios: Ratios::Geometric(cfg.variance_ratio),
        samples: vec![cfg.variance_samples; cfg.variance_levels + 1],
    };
    let seed = sample_seed(global_seed, VARIANCE_STREAM, 0);
    let est = mlmc_estimate(sampler, &plan, seed, SeedMode::Independent)
        .map_err(|e| CalibrationError::Solver(format!("variance study (global seed {seed}): {e}")))?;
    let diffs: Vec<(f64, f64)> = est.levels[1..].iter().map(|s| (est.levels[s.level - 1].h, s.sigma)).collect();
    let fit = fit_level_variance(est.levels[0].sigma, &diffs)?;
    Ok(VarianceStudy { plan, levels: est.levels, fit })
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Sequential timing runs: per mesh size, `repetitions` passes over the
/// same seeds after one warm-up solve; the sample count grows until every
/// component is well above the timer resolution.
pub fn timing_study(
    sampler: &DeviceSampler,
    cfg: &CalibrationConfig,
    global_seed: u64,
) -> Result<TimingStudy, CalibrationError> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &h in &cfg.timing_mesh_sizes {
        let warm = sample_seed(global_seed, TIMING_STREAM, u64::MAX);
        sampler.solve(h, warm).map_err(|e| solver_error(h, warm, e))?;
        let mut samples = cfg.timing_samples;
        let per_rep = loop {
            let mut reps = Vec::with_capacity(cfg.repetitions);
            for _ in 0..cfg.repetitions {
                let mut total = Timings::default();
                for i in 0..samples {
                    let seed = sample_seed(global_seed, TIMING_STREAM, i);
                    let out = sampler.solve(h, seed).map_err(|e| solver_error(h, seed, e))?;
                    total.add(&out.timings);
                }
                reps.push(total.as_array());
            }
            let smallest =
                (0..4).map(|k| median(&reps.iter().map(|r| r[k]).collect::<Vec<_>>())).fold(f64::INFINITY, f64::min);
            if smallest >= 10.0 * TIMER_RESOLUTION || samples >= cfg.max_timing_samples {
                break reps;
            }
            samples = (samples * 4).min(cfg.max_timing_samples);
        };
        for (k, (label, multiplicity)) in COMPONENTS.iter().enumerate() {
            let seconds: Vec<f64> = per_rep.iter().map(|r| r[k]).collect();
            rows.push(TimingRow {
                label: label.to_string(),
                multiplicity: *multiplicity,
                h,
                samples,
                median: median(&seconds),
                seconds,
            });
        }
    }
    let fit = fit_cost_model(&timing_components(&rows))?;
    Ok(TimingStudy { rows, fit })
}

/// Groups timing rows by component, in first-seen order.
pub fn timing_components(rows: &[TimingRow]) -> Vec<ComponentTimings> {
    let mut out: Vec<ComponentTimings> = Vec::new();
    for r in rows {
        let run = TimingRun { h: r.h, samples: r.samples, seconds: r.median };
        match out.iter_mut().find(|c| c.label == r.label) {
            Some(c) => c.runs.push(run),
            None => {
                out.push(ComponentTimings { label: r.label.clone(), multiplicity: r.multiplicity, runs: vec![run] })
            }
        }
    }
    out
}

/// Runs the three studies and assembles the constants.
pub fn calibrate(
    sampler: &DeviceSampler,
    cfg: &CalibrationConfig,
    global_seed: u64,
) -> Result<CalibrationReport, CalibrationError> {
    let discretization = discretization_study(sampler, cfg, global_seed)?;
    let variance = variance_study(sampler, cfg, global_seed)?;
    let timing = timing_study(sampler, cfg, global_seed)?;
    Ok(assemble_report(sampler.model().qoi.clone(), global_seed, discretization, variance, timing))
}

pub fn assemble_report(
    qoi: QoiKind,
    seed: u64,
    discretization: DiscretizationStudy,
    variance: VarianceStudy,
    timing: TimingStudy,
) -> CalibrationReport {
    CalibrationReport {
        error_model: ErrorModel {
            alpha: discretization.fit.alpha,
            c1: discretization.fit.c1,
            beta: variance.fit.beta,
            c0: variance.fit.c0,
            c00: variance.fit.c00,
        },
        cost_model: timing.fit.model.clone(),
        qoi,
        seed,
        discretization,
        variance,
        timing,
    }
}
