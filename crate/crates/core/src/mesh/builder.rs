use super::geometry::{DeviceGeometry, LayeredDomain, Side, Subdomain};
use super::trimesh::{EdgeTag, TaggedEdge, TriMesh};
use super::MeshError;

/// Upper bound on generated vertices; finer requests are refused.
const MAX_VERTICES: f64 = 5.0e7;

/// Meshes the device at (approximately, from below) the requested size.
pub fn build_device_mesh(geometry: &DeviceGeometry, h_target: f64) -> Result<TriMesh, MeshError> {
    geometry.validate()?;
    build_layered_mesh(&geometry.layered(), h_target)
}

/// Re-meshes at target size `h / ratio`. The level counter is incremented.
///
/// Ratios need not be integers, so the new mesh is generated from the stored
/// layout rather than by splitting triangles.
pub fn refine_to(mesh: &TriMesh, ratio: f64) -> Result<TriMesh, MeshError> {
    if !(ratio.is_finite() && ratio >= 1.0) {
        return Err(MeshError::Refinement(format!("ratio must be >= 1, got {ratio}")));
    }
    let layout = mesh.layout().ok_or_else(|| MeshError::Refinement("mesh has no layout to re-mesh from".into()))?;
    let target = mesh.target_h() / ratio;
    let m = build_layered_mesh(layout, target)?;
    let level = mesh.level() + 1;
    Ok(m.with_layout(layout.clone(), target, level))
}

/// Structured triangulation of a layered rectangle with alternating
/// diagonals. Grid lines pass through every layer boundary and contact end
/// point; every cell has diagonal at most `h_target`.
pub fn build_layered_mesh(layout: &LayeredDomain, h_target: f64) -> Result<TriMesh, MeshError> {
    layout.validate()?;
    let height = layout.height();
    let extent = layout.width.max(height);
    if !(h_target.is_finite() && h_target > 0.0) {
        return Err(MeshError::Refinement(format!("target size must be positive, got {h_target}")));
    }
    if h_target < extent * 1e-12 {
        return Err(MeshError::Refinement(format!(
            "target size {h_target:e} is below the representable resolution of a domain of extent {extent}"
        )));
    }
    let spacing = h_target / std::f64::consts::SQRT_2;

    let mut xb = vec![0.0, layout.width];
    let mut yb = layout.layer_bounds();
    for c in &layout.contacts {
        let (a, b) = c.range(layout.side_length(c.side));
        match c.side {
            Side::Bottom | Side::Top => xb.extend([a, b]),
            Side::Left | Side::Right => yb.extend([a, b]),
        }
    }
    let xs = subdivide(xb, spacing, extent);
    let ys = subdivide(yb, spacing, extent);
    let (nx, ny) = (xs.len() - 1, ys.len() - 1);
    if ((nx + 1) as f64) * ((ny + 1) as f64) > MAX_VERTICES {
        return Err(MeshError::Refinement(format!("target size {h_target:e} would need {} x {} cells", nx, ny)));
    }

    let bounds = layout.layer_bounds();
    let cell_layer: Vec<Subdomain> = (0..ny)
        .map(|j| {
            let yc = 0.5 * (ys[j] + ys[j + 1]);
            let l = bounds.windows(2).position(|w| yc >= w[0] && yc <= w[1]).unwrap_or(layout.layers.len() - 1);
            layout.layers[l].0
        })
        .collect();

    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for &y in &ys {
        for &x in &xs {
            vertices.push([x, y]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    let mut subdomains = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (p00, p10, p11, p01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if (i + j) % 2 == 0 {
                triangles.push([p00, p10, p11]);
                triangles.push([p00, p11, p01]);
            } else {
                triangles.push([p00, p10, p01]);
                triangles.push([p10, p11, p01]);
            }
            subdomains.push(cell_layer[j]);
            subdomains.push(cell_layer[j]);
        }
    }

    let contact_at = |side: Side, s: f64| {
        layout.contacts.iter().position(|c| {
            let (a, b) = c.range(layout.side_length(side));
            c.side == side && s >= a && s <= b
        })
    };
    let tag = |c: Option<usize>| c.map_or(EdgeTag::Neumann, EdgeTag::Contact);
    let mut edges = Vec::new();
    for i in 0..nx {
        let xm = 0.5 * (xs[i] + xs[i + 1]);
        edges.push(TaggedEdge { nodes: [id(i, 0), id(i + 1, 0)], tag: tag(contact_at(Side::Bottom, xm)) });
        edges.push(TaggedEdge { nodes: [id(i, ny), id(i + 1, ny)], tag: tag(contact_at(Side::Top, xm)) });
    }
    for j in 0..ny {
        let ym = 0.5 * (ys[j] + ys[j + 1]);
        edges.push(TaggedEdge { nodes: [id(0, j), id(0, j + 1)], tag: tag(contact_at(Side::Left, ym)) });
        edges.push(TaggedEdge { nodes: [id(nx, j), id(nx, j + 1)], tag: tag(contact_at(Side::Right, ym)) });
    }
    for j in 1..ny {
        let below = cell_layer[j - 1] == Subdomain::Liquid;
        let above = cell_layer[j] == Subdomain::Liquid;
        if below != above {
            for i in 0..nx {
                edges.push(TaggedEdge { nodes: [id(i, j), id(i + 1, j)], tag: EdgeTag::Interface });
            }
        }
    }

    let mesh = TriMesh::from_parts(vertices, triangles, subdomains, edges, layout.contacts.clone())?;
    Ok(mesh.with_layout(layout.clone(), h_target, 0))
}

/// Sorted, de-duplicated breakpoints with every gap cut into equal pieces no
/// longer than `spacing`.
fn subdivide(mut breaks: Vec<f64>, spacing: f64, extent: f64) -> Vec<f64> {
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * extent);
    let mut out = vec![breaks[0]];
    for w in breaks.windows(2) {
        let len = w[1] - w[0];
        let n = ((len / spacing) - 1e-9).ceil().max(1.0) as usize;
        for k in 1..=n {
            out.push(if k == n { w[1] } else { w[0] + len * k as f64 / n as f64 });
        }
    }
    out
}
