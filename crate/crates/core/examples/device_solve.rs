//! Solves one random-dopant realization of the default sensor and reports
//! the Gummel iteration, the quantities of interest and the solver timings.
//!
//! cargo run --release --example device_solve -- [seed] [h] [fields.csv]

use std::fs::File;
use std::io::BufWriter;

use mlmc_ddp::fem::{contact_current, mean_potential, surface_field, write_fields_csv};
use mlmc_ddp::stochastic::{DeviceModel, Level};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let seed: u64 = args.get(1).map(|s| s.parse()).transpose()?.unwrap_or(7);
    let h: f64 = args.get(2).map(|s| s.parse()).transpose()?.unwrap_or(2.5);

    let model = DeviceModel::default();
    let level = Level::new(&model, h)?;
    let sample = model.draw(seed)?;
    println!(
        "seed {seed}: {} dopants, mesh h = {:.4}, {} nodes",
        sample.count,
        level.disc.mesh().h(),
        level.disc.num_nodes()
    );

    let fields = level.solve(&model, &sample)?;
    println!("Gummel converged in {} iterations ({} Newton steps)", fields.iterations, fields.newton_iterations);
    for (k, d) in fields.history.iter().enumerate() {
        println!("  {k:>3}  {d:.3e}");
    }
    println!("bound violations: {}", fields.violations.len());

    let p = &model.physics;
    println!("mean potential over Si: {:.6e} V", mean_potential(&level.disc, &fields.potential));
    println!("surface field:          {:.6e} V/nm", surface_field(&level.disc, &fields.potential));
    for c in &model.geometry.contacts {
        let j = contact_current(&fields, &level.disc, p, &level.bc, &c.name)?;
        println!("current at {:<10} {:.6e} A/µm", c.name, j.current);
    }
    let t = &fields.timings;
    println!(
        "timings [s]: poisson {:.3e} + {:.3e}, drift-diffusion {:.3e} + {:.3e}",
        t.poisson_assembly, t.poisson_solve, t.dd_assembly, t.dd_solve
    );

    if let Some(path) = args.get(3) {
        write_fields_csv(&fields, level.disc.mesh(), BufWriter::new(File::create(path)?))?;
        println!("wrote {path}");
    }
    Ok(())
}
