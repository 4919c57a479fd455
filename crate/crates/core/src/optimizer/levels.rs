use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::problems::{optimize, OptimizerOptions, Optimum, Variant};
use super::OptimizerError;
use crate::calibration::CostModel;
use crate::estimators::ErrorModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelPoint {
    pub levels: usize,
    pub continuous_work: Option<f64>,
    pub work: Option<f64>,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSweep {
    pub best: Optimum,
    pub curve: Vec<LevelPoint>,
}

/// Solves the hierarchy problem for every `L ≤ l_max` and keeps the plan
/// with the least work after flooring.
pub fn select_levels(
    cost: &CostModel,
    error: &ErrorModel,
    eps: f64,
    variant: Variant,
    l_max: usize,
    opts: &OptimizerOptions,
) -> Result<LevelSweep, OptimizerError> {
    let top = if variant == Variant::Mc { 0 } else { l_max };
    let runs: Vec<Result<Optimum, OptimizerError>> =
        (0..=top).into_par_iter().map(|l| optimize(variant, cost, error, eps, l, opts)).collect();
    let curve = runs
        .iter()
        .enumerate()
        .map(|(l, r)| match r {
            Ok(o) => {
                LevelPoint { levels: l, continuous_work: Some(o.continuous.work), work: Some(o.work), message: None }
            }
            Err(e) => LevelPoint { levels: l, continuous_work: None, work: None, message: Some(e.to_string()) },
        })
        .collect();
    let mut best: Option<Optimum> = None;
    let mut first_err = None;
    for r in runs {
        match r {
            Ok(o) if best.as_ref().is_none_or(|b| o.work < b.work) => best = Some(o),
            Ok(_) => {}
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    match best {
        Some(best) => Ok(LevelSweep { best, curve }),
        None => Err(first_err.expect("at least one level count")),
    }
}

/// CSV with header `levels,continuous_work,work,message`.
pub fn write_level_curve_csv<W: Write>(curve: &[LevelPoint], writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["levels", "continuous_work", "work", "message"])?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
    for p in curve {
        w.write_record([
            p.levels.to_string(),
            opt(p.continuous_work),
            opt(p.work),
            p.message.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
