use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{check_tolerances, Constants, RunConfig};
use super::summary::{compare, read_summary_csv, write_comparison_csv, write_summary_csv, SummaryRow};
use super::CliError;
use crate::calibration::{
    assemble_report, discretization_study, timing_study, variance_study, write_error_csv, write_timing_csv,
    write_variance_csv, CalibrationReport,
};
use crate::estimators::{mlmc_estimate, LevelStats, MlmcPlan};
use crate::optimizer::{select_levels, write_level_curve_csv, OptimizerError, Optimum, Variant};
use crate::stochastic::DeviceSampler;

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map(|s| s + "\n").map_err(|e| CliError::Io(e.to_string()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    std::fs::write(path, to_json(value)?).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn sampler(cfg: &RunConfig) -> Result<DeviceSampler, CliError> {
    DeviceSampler::new(cfg.device.clone()).map_err(|e| CliError::Config(e.to_string()))
}

/// Output files of `calibrate`.
pub const REPORT_FILE: &str = "calibration.json";
pub const ERROR_FILE: &str = "errors.csv";
pub const VARIANCE_FILE: &str = "variance.csv";
pub const TIMING_FILE: &str = "timing.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const COMPARISON_FILE: &str = "comparison.csv";

/// Runs the three calibration studies, writing each table as soon as it is
/// available. Returns `None` on a dry run.
pub fn cmd_calibrate(cfg: &RunConfig, dry_run: bool) -> Result<Option<CalibrationReport>, CliError> {
    cfg.validate()?;
    cfg.prepare_output()?;
    let sampler = sampler(cfg)?;
    if dry_run {
        let h0 = cfg.calibration.mesh_sizes.iter().cloned().fold(0.0, f64::max);
        let level = sampler.level(h0).map_err(|e| CliError::Config(e.to_string()))?;
        let mesh = level.disc.mesh();
        println!(
            "dry run: level-0 mesh h = {h0} has {} vertices, {} triangles",
            mesh.num_vertices(),
            mesh.num_triangles()
        );
        return Ok(None);
    }
    let solver = |e: crate::calibration::CalibrationError| match e {
        crate::calibration::CalibrationError::Solver(m) => CliError::Solver(m),
        other => CliError::Solver(other.to_string()),
    };
    let pool = cfg.thread_pool()?;
    let out = &cfg.out;
    let disc = pool.install(|| discretization_study(&sampler, &cfg.calibration, cfg.seed)).map_err(solver)?;
    let path = out.join(ERROR_FILE);
    write_error_csv(&disc, create(&path)?).map_err(csv_err(&path))?;
    let var = pool.install(|| variance_study(&sampler, &cfg.calibration, cfg.seed)).map_err(solver)?;
    let path = out.join(VARIANCE_FILE);
    write_variance_csv(&var, create(&path)?).map_err(csv_err(&path))?;
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(|e| CliError::Config(e.to_string()))?;
    let timing = single.install(|| timing_study(&sampler, &cfg.calibration, cfg.seed)).map_err(solver)?;
    let path = out.join(TIMING_FILE);
    write_timing_csv(&timing, create(&path)?).map_err(csv_err(&path))?;
    let report = assemble_report(cfg.device.qoi.clone(), cfg.seed, disc, var, timing);
    write_json(&out.join(REPORT_FILE), &report)?;
    Ok(Some(report))
}

pub fn plan_path(out: &Path, variant: Variant, index: usize) -> PathBuf {
    out.join("plans").join(format!("{}_{index}.json", variant.label()))
}

pub fn curve_path(out: &Path, variant: Variant, index: usize) -> PathBuf {
    out.join("curves").join(format!("{}_{index}.csv", variant.label()))
}

/// Per ε (index in `epsilon`) and variant: plan JSON, work-vs-L curve and
/// one summary row. Failures are recorded in the summary and the sweep continues.
pub fn cmd_optimize(
    cfg: &RunConfig,
    constants: &Constants,
    epsilon: &[f64],
    dry_run: bool,
) -> Result<Vec<SummaryRow>, CliError> {
    cfg.validate()?;
    constants.validate()?;
    check_tolerances(epsilon)?;
    cfg.prepare_output()?;
    if dry_run {
        println!("dry run: {} tolerances × {} variants, L_max = {}", epsilon.len(), cfg.variants.len(), cfg.l_max);
        return Ok(Vec::new());
    }
    for dir in ["plans", "curves"] {
        std::fs::create_dir_all(cfg.out.join(dir)).map_err(|e| CliError::Io(e.to_string()))?;
    }
    let pool = cfg.thread_pool()?;
    let mut rows = Vec::new();
    for (i, &eps) in epsilon.iter().enumerate() {
        for &variant in &cfg.variants {
            let run = pool.install(|| {
                select_levels(&constants.cost_model, &constants.error_model, eps, variant, cfg.l_max, &cfg.optimizer)
            });
            match run {
                Ok(sweep) => {
                    write_json(&plan_path(&cfg.out, variant, i), &sweep.best)?;
                    let path = curve_path(&cfg.out, variant, i);
                    write_level_curve_csv(&sweep.curve, create(&path)?).map_err(csv_err(&path))?;
                    rows.push(SummaryRow::from_optimum(&sweep.best));
                }
                Err(e @ OptimizerError::Infeasible { .. }) => {
                    rows.push(SummaryRow::failed(eps, variant, format!("infeasible: {e}")))
                }
                Err(e) => rows.push(SummaryRow::failed(eps, variant, format!("failed: {e}"))),
            }
        }
    }
    let path = cfg.out.join(SUMMARY_FILE);
    write_summary_csv(&rows, create(&path)?).map_err(csv_err(&path))?;
    Ok(rows)
}

/// A plan file: either an optimizer result or a bare hierarchy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PlanFile {
    Optimum(Box<Optimum>),
    Plan(MlmcPlan),
}

impl PlanFile {
    pub fn plan(&self) -> &MlmcPlan {
        match self {
            PlanFile::Optimum(o) => &o.plan,
            PlanFile::Plan(p) => p,
        }
    }

    pub fn epsilon(&self) -> Option<f64> {
        match self {
            PlanFile::Optimum(o) => Some(o.epsilon),
            PlanFile::Plan(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    #[serde(flatten)]
    pub stats: LevelStats,
    /// Sequential cost-model time for the fine and coarse solves of the level.
    pub predicted_wall_clock: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub plan: MlmcPlan,
    pub seed: u64,
    pub mean: f64,
    pub statistical_error: f64,
    pub epsilon: Option<f64>,
    /// `ε − C1 h_L^α`.
    pub statistical_budget: Option<f64>,
    pub within_budget: Option<bool>,
    pub levels: Vec<LevelReport>,
}

pub fn estimate_path(out: &Path, plan: &Path) -> PathBuf {
    let stem = plan.file_stem().and_then(|s| s.to_str()).unwrap_or("plan");
    out.join(format!("estimate_{stem}.json"))
}

pub fn cmd_estimate(
    cfg: &RunConfig,
    plan_file: &Path,
    constants: Option<&Constants>,
    dry_run: bool,
) -> Result<Option<EstimateResult>, CliError> {
    cfg.validate()?;
    let file: PlanFile = read_json(plan_file)?;
    let plan = file.plan().clone();
    plan.validate().map_err(|e| CliError::Config(e.to_string()))?;
    cfg.prepare_output()?;
    let sampler = sampler(cfg)?;
    if dry_run {
        let level = sampler.level(plan.h0).map_err(|e| CliError::Config(e.to_string()))?;
        println!(
            "dry run: {} levels, level-0 mesh h = {} has {} vertices",
            plan.levels + 1,
            plan.h0,
            level.disc.mesh().num_vertices()
        );
        return Ok(None);
    }
    let pool = cfg.thread_pool()?;
    let est = pool
        .install(|| mlmc_estimate(&sampler, &plan, cfg.seed, cfg.seed_mode))
        .map_err(|e| CliError::Solver(e.to_string()))?;
    let h = plan.mesh_sizes();
    let levels = est
        .levels
        .into_iter()
        .map(|stats| {
            let predicted = constants.map(|c| {
                let l = stats.level;
                let coarse = if l == 0 { 0.0 } else { c.cost_model.per_sample(h[l - 1]) };
                stats.samples as f64 * (c.cost_model.per_sample(h[l]) + coarse)
            });
            LevelReport { stats, predicted_wall_clock: predicted }
        })
        .collect();
    let epsilon = file.epsilon();
    let statistical_budget = match (epsilon, constants) {
        (Some(eps), Some(c)) => Some(eps - c.error_model.c1 * h[plan.levels].powf(c.error_model.alpha)),
        (Some(eps), None) => Some(eps),
        _ => None,
    };
    let result = EstimateResult {
        plan,
        seed: cfg.seed,
        mean: est.mean,
        statistical_error: est.statistical_error,
        epsilon,
        statistical_budget,
        within_budget: statistical_budget.map(|b| est.statistical_error <= b),
        levels,
    };
    write_json(&estimate_path(&cfg.out, plan_file), &result)?;
    Ok(Some(result))
}

/// Joins summary tables by ε into `comparison.csv`.
pub fn cmd_compare(cfg: &RunConfig, summaries: &[PathBuf], dry_run: bool) -> Result<PathBuf, CliError> {
    let mut tables = Vec::new();
    for (i, p) in summaries.iter().enumerate() {
        let f = File::open(p).map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
        let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("summary");
        let parent = p.parent().and_then(|d| d.file_name()).and_then(|s| s.to_str());
        let taken = |n: &str| tables.iter().any(|(t, _): &(String, _)| t == n);
        let name = match parent {
            _ if !taken(stem) => stem.to_string(),
            Some(d) if !taken(&format!("{d}_{stem}")) => format!("{d}_{stem}"),
            _ => format!("{stem}{i}"),
        };
        tables.push((name, read_summary_csv(f)?));
    }
    let comparison = compare(&tables)?;
    let path = cfg.out.join(COMPARISON_FILE);
    if !dry_run {
        cfg.prepare_output()?;
        write_comparison_csv(&comparison, create(&path)?).map_err(csv_err(&path))?;
    }
    Ok(path)
}
