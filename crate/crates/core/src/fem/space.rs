use crate::mesh::{EdgeTag, Subdomain, TriMesh};

use super::sparse::Pattern;

/// Per-mesh data that does not depend on the random sample: P1 stiffness
/// blocks, lumped masses, node classification and the sparsity patterns of
/// the Poisson (all nodes) and continuity (silicon nodes) systems.
#[derive(Debug)]
pub struct Discretization {
    mesh: TriMesh,
    local_stiffness: Vec<[[f64; 3]; 3]>,
    mass_si: Vec<f64>,
    mass_liq: Vec<f64>,
    interface_load: Vec<f64>,
    pure_liquid: Vec<bool>,
    node_contact: Vec<Option<usize>>,
    pattern: Pattern,
    si_nodes: Vec<usize>,
    si_local: Vec<Option<usize>>,
    si_triangles: Vec<usize>,
    si_pattern: Pattern,
    si_surface: Vec<(usize, [f64; 2])>,
    si_edges: Vec<SiEdge>,
    clipped_edges: usize,
}

/// Edge of the silicon subgraph with its cotangent weight
/// `−Σ_T K^T_ab` summed over the adjacent silicon triangles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiEdge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

impl Discretization {
    pub fn new(mesh: TriMesh) -> Self {
        let nv = mesh.num_vertices();
        let verts = mesh.vertices();
        let mut local_stiffness = Vec::with_capacity(mesh.num_triangles());
        let mut mass_si = vec![0.0; nv];
        let mut mass_liq = vec![0.0; nv];
        let mut non_liquid = vec![false; nv];
        for (k, (t, sub)) in mesh.triangles().iter().zip(mesh.subdomains()).enumerate() {
            local_stiffness.push(p1_stiffness([verts[t[0]], verts[t[1]], verts[t[2]]]));
            let third = mesh.area(k) / 3.0;
            for &n in t {
                match sub {
                    Subdomain::Silicon => mass_si[n] += third,
                    Subdomain::Liquid => mass_liq[n] += third,
                    Subdomain::Oxide => {}
                }
                if *sub != Subdomain::Liquid {
                    non_liquid[n] = true;
                }
            }
        }
        let mut interface_load = vec![0.0; nv];
        for e in mesh.tagged_edges() {
            if e.tag == EdgeTag::Interface {
                let [a, b] = e.nodes;
                let len = ((verts[a][0] - verts[b][0]).powi(2) + (verts[a][1] - verts[b][1]).powi(2)).sqrt();
                interface_load[a] += 0.5 * len;
                interface_load[b] += 0.5 * len;
            }
        }
        let pure_liquid = non_liquid.iter().map(|&x| !x).collect();
        let node_contact = mesh.node_contacts();
        let pattern = Pattern::new(nv, mesh.triangles());

        let in_si = mesh.nodes_in(Subdomain::Silicon);
        let mut si_local = vec![None; nv];
        let mut si_nodes = Vec::new();
        for (i, &s) in in_si.iter().enumerate() {
            if s {
                si_local[i] = Some(si_nodes.len());
                si_nodes.push(i);
            }
        }
        let si_triangles: Vec<usize> =
            (0..mesh.num_triangles()).filter(|&k| mesh.subdomains()[k] == Subdomain::Silicon).collect();
        let si_elems: Vec<[usize; 3]> = si_triangles
            .iter()
            .map(|&k| mesh.triangles()[k].map(|n| si_local[n].expect("silicon element node")))
            .collect();
        let si_pattern = Pattern::new(si_nodes.len(), &si_elems);
        let si_surface = silicon_surface(&mesh);
        let (si_edges, clipped_edges) = silicon_edges(&si_elems, &si_triangles, &local_stiffness);
        Self {
            mesh,
            local_stiffness,
            mass_si,
            mass_liq,
            interface_load,
            pure_liquid,
            node_contact,
            pattern,
            si_nodes,
            si_local,
            si_triangles,
            si_pattern,
            si_surface,
            si_edges,
            clipped_edges,
        }
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn num_nodes(&self) -> usize {
        self.mesh.num_vertices()
    }

    /// `∫ ∇φ_a · ∇φ_b` on triangle `k`.
    pub fn local_stiffness(&self, k: usize) -> &[[f64; 3]; 3] {
        &self.local_stiffness[k]
    }

    pub fn mass_si(&self) -> &[f64] {
        &self.mass_si
    }

    pub fn mass_liq(&self) -> &[f64] {
        &self.mass_liq
    }

    /// `∫_Γ φ_i`.
    pub fn interface_load(&self) -> &[f64] {
        &self.interface_load
    }

    /// Nodes whose neighbourhood lies entirely in the liquid.
    pub fn pure_liquid(&self) -> &[bool] {
        &self.pure_liquid
    }

    pub fn node_contact(&self) -> &[Option<usize>] {
        &self.node_contact
    }

    pub fn pattern(&self) -> &Pattern {
        &self.pattern
    }

    /// Global ids of the silicon nodes, in local order.
    pub fn si_nodes(&self) -> &[usize] {
        &self.si_nodes
    }

    /// Silicon edges in local numbering; negative weights (non-Delaunay
    /// edges and obtuse angles on the silicon boundary) are clipped to zero
    /// so that the exponentially fitted operator is an M-matrix.
    pub fn si_edges(&self) -> &[SiEdge] {
        &self.si_edges
    }

    pub fn clipped_edges(&self) -> usize {
        self.clipped_edges
    }

    pub fn si_local(&self, node: usize) -> Option<usize> {
        self.si_local[node]
    }

    pub fn si_triangles(&self) -> &[usize] {
        &self.si_triangles
    }

    pub fn si_pattern(&self) -> &Pattern {
        &self.si_pattern
    }

    /// Silicon triangles with an edge on the boundary to another subdomain,
    /// with the outward normal of that edge scaled by its length.
    pub fn si_surface(&self) -> &[(usize, [f64; 2])] {
        &self.si_surface
    }

    /// Constant gradient of a P1 field on triangle `k`.
    pub fn gradient(&self, k: usize, values: &[f64]) -> [f64; 2] {
        let t = self.mesh.triangles()[k];
        let p = self.mesh.vertices();
        let (a, b, c) = (p[t[0]], p[t[1]], p[t[2]]);
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let (d1, d2) = (values[t[1]] - values[t[0]], values[t[2]] - values[t[0]]);
        [(d1 * (c[1] - a[1]) - d2 * (b[1] - a[1])) / det, ((b[0] - a[0]) * d2 - (c[0] - a[0]) * d1) / det]
    }

    pub fn si_area(&self) -> f64 {
        self.mass_si.iter().sum()
    }
}

fn silicon_surface(mesh: &TriMesh) -> Vec<(usize, [f64; 2])> {
    use std::collections::HashMap;
    let mut owners: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (k, t) in mesh.triangles().iter().enumerate() {
        for a in 0..3 {
            let (i, j) = (t[a], t[(a + 1) % 3]);
            owners.entry((i.min(j), i.max(j))).or_default().push(k);
        }
    }
    let verts = mesh.vertices();
    let mut out = Vec::new();
    for (k, t) in mesh.triangles().iter().enumerate() {
        if mesh.subdomains()[k] != Subdomain::Silicon {
            continue;
        }
        let c = mesh.centroid(k);
        for a in 0..3 {
            let (i, j) = (t[a], t[(a + 1) % 3]);
            let foreign = owners[&(i.min(j), i.max(j))].iter().any(|&o| mesh.subdomains()[o] != Subdomain::Silicon);
            if foreign {
                let (pi, pj) = (verts[i], verts[j]);
                let mut n = [pj[1] - pi[1], pi[0] - pj[0]];
                let mid = [0.5 * (pi[0] + pj[0]) - c[0], 0.5 * (pi[1] + pj[1]) - c[1]];
                if n[0] * mid[0] + n[1] * mid[1] < 0.0 {
                    n = [-n[0], -n[1]];
                }
                out.push((k, n));
            }
        }
    }
    out
}

fn silicon_edges(si_elems: &[[usize; 3]], si_triangles: &[usize], stiffness: &[[[f64; 3]; 3]]) -> (Vec<SiEdge>, usize) {
    let mut map: std::collections::BTreeMap<(usize, usize), f64> = std::collections::BTreeMap::new();
    for (t, &k) in si_elems.iter().zip(si_triangles) {
        for a in 0..3 {
            for b in (a + 1)..3 {
                let key = (t[a].min(t[b]), t[a].max(t[b]));
                *map.entry(key).or_default() -= stiffness[k][a][b];
            }
        }
    }
    let mut clipped = 0;
    let edges = map
        .into_iter()
        .map(|((a, b), w)| {
            if w < 0.0 {
                clipped += 1;
            }
            SiEdge { a, b, weight: w.max(0.0) }
        })
        .collect();
    (edges, clipped)
}

pub fn p1_stiffness(p: [[f64; 2]; 3]) -> [[f64; 3]; 3] {
    let area2 = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    // Gradient of φ_a is the rotated opposite edge over 2|K|.
    let mut g = [[0.0; 2]; 3];
    for a in 0..3 {
        let b = (a + 1) % 3;
        let c = (a + 2) % 3;
        g[a] = [(p[b][1] - p[c][1]) / area2, (p[c][0] - p[b][0]) / area2];
    }
    let area = 0.5 * area2;
    let mut k = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            k[a][b] = area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
        }
    }
    k
}

/// Bernoulli function `x / (e^x - 1)`.
pub fn bernoulli(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        let x2 = x * x;
        1.0 - 0.5 * x + x2 / 12.0 - x2 * x2 / 720.0
    } else if x > 700.0 {
        x * (-x).exp()
    } else {
        x / x.exp_m1()
    }
}

/// Scharfetter-Gummel weight `e^{ψ_i} B(ψ_i - ψ_j)`, symmetric in (i, j).
pub fn sg_weight(psi_i: f64, psi_j: f64) -> f64 {
    let lo = psi_i.min(psi_j);
    let hi = psi_i.max(psi_j);
    lo.min(700.0).exp() * bernoulli(lo - hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_of_affine_field() {
        let mesh = crate::mesh::build_device_mesh(&crate::mesh::DeviceGeometry::default(), 7.0).unwrap();
        let disc = Discretization::new(mesh);
        let v: Vec<f64> = disc.mesh().vertices().iter().map(|x| 1.5 - 0.3 * x[0] + 0.7 * x[1]).collect();
        for k in 0..disc.mesh().num_triangles() {
            let g = disc.gradient(k, &v);
            assert!((g[0] + 0.3).abs() < 1e-12 && (g[1] - 0.7).abs() < 1e-12, "{k}: {g:?}");
        }
    }
    use crate::mesh::{build_device_mesh, DeviceGeometry};

    #[test]
    fn right_triangle_stiffness() {
        let k = p1_stiffness([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let expect = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for a in 0..3 {
            for b in 0..3 {
                assert!((k[a][b] - expect[a][b]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn bernoulli_matches_definition() {
        for &x in &[-30.0f64, -2.0, -1e-2, -5e-4, 0.0, 3e-4, 0.2, 5.0, 40.0] {
            let exact = if x == 0.0 { 1.0 } else { x / (x.exp() - 1.0) };
            assert!((bernoulli(x) - exact).abs() <= 1e-13 * exact.abs().max(1.0), "{x}");
        }
        assert!(bernoulli(800.0) >= 0.0 && bernoulli(-800.0) == 800.0);
    }

    #[test]
    fn sg_weight_is_symmetric_and_reduces_to_exponential() {
        for &(a, b) in &[(0.3f64, -1.2f64), (-40.0, 35.0), (2.0, 2.0)] {
            let w1 = sg_weight(a, b);
            let w2 = sg_weight(b, a);
            assert!((w1 - w2).abs() <= 1e-14 * w1);
            // The inverse of the mean of e^{-ψ} along the edge.
            let mean_inv = if a == b { (-a).exp() } else { ((-a).exp() - (-b).exp()) / (b - a) };
            assert!((w1 * mean_inv - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn masses_partition_the_subdomains() {
        let mesh = build_device_mesh(&DeviceGeometry::default(), 5.0).unwrap();
        let d = Discretization::new(mesh);
        assert!((d.si_area() - 3000.0).abs() < 1e-9);
        assert!((d.mass_liq().iter().sum::<f64>() - 1800.0).abs() < 1e-9);
        assert!((d.interface_load().iter().sum::<f64>() - 60.0).abs() < 1e-9);
        let surface: f64 = d.si_surface().iter().map(|(_, n)| n[1]).sum();
        assert!((surface - 60.0).abs() < 1e-9);
        assert!(d.si_surface().iter().all(|(_, n)| n[0].abs() < 1e-12 && n[1] > 0.0));
        assert_eq!(d.si_nodes().len(), d.si_pattern().dim());
        for k in 0..d.mesh().num_triangles() {
            let row: f64 = d.local_stiffness(k)[0].iter().sum();
            assert!(row.abs() < 1e-12);
        }
    }
}
