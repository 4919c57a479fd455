use std::io::{self, Write};

use super::trimesh::{EdgeTag, TriMesh};

/// Plain-text dump: a vertex block, a triangle block with subdomain tags and
/// a tagged-edge block.
pub fn write_mesh_text<W: Write>(mesh: &TriMesh, mut out: W) -> io::Result<()> {
    writeln!(out, "# trimesh level={} h={}", mesh.level(), mesh.h())?;
    writeln!(out, "vertices {}", mesh.num_vertices())?;
    for (i, p) in mesh.vertices().iter().enumerate() {
        writeln!(out, "{i} {} {}", p[0], p[1])?;
    }
    writeln!(out, "triangles {}", mesh.num_triangles())?;
    for (k, (t, s)) in mesh.triangles().iter().zip(mesh.subdomains()).enumerate() {
        writeln!(out, "{k} {} {} {} {}", t[0], t[1], t[2], s.as_str())?;
    }
    writeln!(out, "edges {}", mesh.tagged_edges().len())?;
    for e in mesh.tagged_edges() {
        let tag = match e.tag {
            EdgeTag::Contact(c) => format!("contact:{}", mesh.contacts()[c].name),
            EdgeTag::Neumann => "neumann".to_string(),
            EdgeTag::Interface => "interface".to_string(),
        };
        writeln!(out, "{} {} {tag}", e.nodes[0], e.nodes[1])?;
    }
    Ok(())
}
