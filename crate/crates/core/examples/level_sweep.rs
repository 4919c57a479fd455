//! Optimal number of levels as the tolerance shrinks, and the work-vs-L
//! curve behind each choice.
//!
//! cargo run --release --example level_sweep

use mlmc_ddp::calibration::CostModel;
use mlmc_ddp::estimators::ErrorModel;
use mlmc_ddp::optimizer::{select_levels, write_level_curve_csv, OptimizerOptions, Variant};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let error = ErrorModel { alpha: 1.0, c1: 1.0, beta: 2.0, c0: 0.5, c00: 1.0 };
    let cost = CostModel::single(1.0, 2.0);
    let opts = OptimizerOptions { h_max: 1.0, ..Default::default() };

    for eps in [0.1, 0.05, 0.02, 0.01, 0.005] {
        let mc = select_levels(&cost, &error, eps, Variant::Mc, 0, &opts)?;
        let free = select_levels(&cost, &error, eps, Variant::Free, 6, &opts)?;
        println!(
            "eps {eps:<6} L = {}  work {:.4e}  MC work {:.4e}  ratio {:.1}",
            free.best.levels,
            free.best.work,
            mc.best.work,
            mc.best.work / free.best.work
        );
        if eps == 0.01 {
            let mut out = Vec::new();
            write_level_curve_csv(&free.curve, &mut out)?;
            print!("{}", String::from_utf8(out)?);
        }
    }
    Ok(())
}
