//! Builds the default device mesh on a range of mesh sizes and writes the
//! finest one as plain text.
//!
//! cargo run --release --example mesh_levels -- [out.txt]

use std::fs::File;
use std::io::BufWriter;

use mlmc_ddp::mesh::{build_device_mesh, refine_to, shape_regularity, DeviceGeometry, Subdomain};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let geometry = DeviceGeometry::default();
    println!("{:>7} {:>8} {:>9} {:>7} {:>9}", "target", "h", "vertices", "tris", "shape");
    let mut finest = None;
    for h in [5.0, 2.5, 1.25, 0.625] {
        let mesh = build_device_mesh(&geometry, h)?;
        println!(
            "{h:>7} {:>8.4} {:>9} {:>7} {:>9.3}",
            mesh.h(),
            mesh.num_vertices(),
            mesh.num_triangles(),
            shape_regularity(&mesh)?
        );
        finest = Some(mesh);
    }
    let mesh = finest.unwrap();
    for sub in [Subdomain::Silicon, Subdomain::Oxide, Subdomain::Liquid] {
        println!("{:>8} area {:.2} nm²", sub.as_str(), mesh.subdomain_area(sub));
    }

    let coarse = build_device_mesh(&geometry, 5.0)?;
    let refined = refine_to(&coarse, 3.0)?;
    println!("ratio 3 refinement of h = 5: h = {:.4}, {} triangles", refined.h(), refined.num_triangles());

    if let Some(path) = std::env::args().nth(1) {
        mlmc_ddp::mesh::write_mesh_text(&mesh, BufWriter::new(File::create(&path)?))?;
        println!("wrote {path}");
    }
    Ok(())
}
