//! A reduced calibration run: fewer seeds and samples than the defaults,
//! enough to see the fitted constants take shape in about a minute.
//!
//! cargo run --release --example calibrate_small

use mlmc_ddp::calibration::{calibrate, CalibrationConfig};
use mlmc_ddp::fem::QoiKind;
use mlmc_ddp::stochastic::{DeviceModel, DeviceSampler};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sampler = DeviceSampler::new(DeviceModel { qoi: QoiKind::SurfaceField, ..Default::default() })?;
    let cfg = CalibrationConfig {
        mesh_sizes: vec![5.0, 2.5, 1.25],
        error_seeds: 4,
        variance_samples: 16,
        timing_mesh_sizes: vec![5.0, 2.5, 1.25],
        repetitions: 1,
        ..Default::default()
    };
    let report = calibrate(&sampler, &cfg, 1)?;

    println!("discretization error vs reference h = {}", report.discretization.reference_h);
    for r in &report.discretization.rows {
        println!("  h = {:<5} error {:.3e}", r.h, r.error);
    }
    println!("level statistics");
    for l in &report.variance.levels {
        println!("  level {} h = {:<6} sigma {:.3e}", l.level, l.h, l.sigma);
    }
    let m = report.error_model;
    println!("alpha {:.3}  C1 {:.3e}  beta {:.3}  C0 {:.3e}  C00 {:.3e}", m.alpha, m.c1, m.beta, m.c0, m.c00);
    for t in &report.cost_model.terms {
        println!("cost term {:<16} mu {:.3e}  gamma {:.3}  x{}", t.label, t.mu, t.gamma, t.multiplicity);
    }
    println!("{}", serde_json::to_string_pretty(&report.error_model)?);
    Ok(())
}
