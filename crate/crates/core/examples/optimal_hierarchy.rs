//! Cost-optimal MC, geometric MLMC and free-ratio MLMC hierarchies for one
//! tolerance, with the interior-point diagnostics.
//!
//! cargo run --release --example optimal_hierarchy -- [epsilon]

use mlmc_ddp::calibration::CostModel;
use mlmc_ddp::estimators::{ErrorModel, Ratios};
use mlmc_ddp::optimizer::{optimize_mc, optimize_mlmc_free, optimize_mlmc_geometric, OptimizerOptions, Optimum};

fn show(name: &str, o: &Optimum) {
    let ratios = match &o.plan.ratios {
        Ratios::Geometric(r) => format!("r = {r:.3}"),
        Ratios::Free(r) => format!("r = {r:.3?}"),
    };
    println!(
        "{name:<10} h0 = {:.4}  {ratios}  M = {:?}  work {:.4e} (continuous {:.4e})",
        o.plan.h0, o.plan.samples, o.work, o.continuous.work
    );
    println!(
        "{:<10} {} IPM iterations, start {}, KKT {:.1e} / {:.1e} / {:.1e}",
        "", o.iterations, o.start, o.kkt.stationarity, o.kkt.primal, o.kkt.complementarity
    );
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let eps: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0.1);
    let error = ErrorModel { alpha: 0.96, c1: 0.903073, beta: 2.0, c0: 0.276, c00: 0.197 };
    let cost = CostModel::single(1.0, 2.328267);
    let opts = OptimizerOptions::default();

    let mc = optimize_mc(&cost, &error, eps, &opts)?;
    show("MC", &mc);
    let geo = optimize_mlmc_geometric(&cost, &error, eps, 2, &opts)?;
    show("geometric", &geo);
    let free = optimize_mlmc_free(&cost, &error, eps, 2, &opts)?;
    show("free", &free);
    println!("work ratio MC / free: {:.2}", mc.work / free.work);
    Ok(())
}
