//! Plain Monte Carlo against a three-level MLMC estimate of the surface
//! field of the sensor. The MLMC hierarchy puts most samples on the coarse
//! mesh and few on the fine ones.
//!
//! cargo run --release --example mc_vs_mlmc

use mlmc_ddp::estimators::{mc_estimate, mlmc_estimate, MlmcPlan, Ratios, SeedMode};
use mlmc_ddp::fem::QoiKind;
use mlmc_ddp::stochastic::{DeviceModel, DeviceSampler};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sampler = DeviceSampler::new(DeviceModel { qoi: QoiKind::SurfaceField, ..Default::default() })?;
    let seed = 11;

    let mc = mc_estimate(&sampler, 1.25, 24, seed)?;
    println!(
        "MC   h = {:<5} M = {:<4} mean {:.6e}  std.err {:.2e}  {:.2} s",
        mc.h,
        mc.samples,
        mc.mean,
        mc.sigma / (mc.samples as f64).sqrt(),
        mc.wall_clock
    );

    let plan = MlmcPlan { levels: 2, h0: 5.0, ratios: Ratios::Geometric(2.0), samples: vec![64, 16, 4] };
    let est = mlmc_estimate(&sampler, &plan, seed, SeedMode::Independent)?;
    println!("MLMC mean {:.6e}  std.err {:.2e}", est.mean, est.statistical_error);
    for l in &est.levels {
        println!(
            "  level {} h = {:<5} M = {:<3} mean {:+.3e}  sigma {:.3e}  {:.2} s",
            l.level, l.h, l.samples, l.mean, l.sigma, l.wall_clock
        );
    }
    Ok(())
}
