use std::collections::HashMap;
use std::sync::OnceLock;

use super::geometry::{ContactSegment, LayeredDomain, Subdomain};
use super::locate::Locator;
use super::MeshError;

/// Tag of a boundary or interface edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeTag {
    /// Dirichlet edge on the contact with the given index.
    Contact(usize),
    /// Zero-flux outer boundary.
    Neumann,
    /// Interior edge on the liquid interface.
    Interface,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TaggedEdge {
    pub nodes: [usize; 2],
    pub tag: EdgeTag,
}

/// Conforming triangulation with subdomain and boundary tags. Immutable after
/// construction.
#[derive(Debug)]
pub struct TriMesh {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    subdomains: Vec<Subdomain>,
    edges: Vec<TaggedEdge>,
    contacts: Vec<ContactSegment>,
    h: f64,
    level: usize,
    target_h: f64,
    layout: Option<LayeredDomain>,
    locator: OnceLock<Locator>,
}

impl Clone for TriMesh {
    fn clone(&self) -> Self {
        Self {
            vertices: self.vertices.clone(),
            triangles: self.triangles.clone(),
            subdomains: self.subdomains.clone(),
            edges: self.edges.clone(),
            contacts: self.contacts.clone(),
            h: self.h,
            level: self.level,
            target_h: self.target_h,
            layout: self.layout.clone(),
            locator: OnceLock::new(),
        }
    }
}

impl TriMesh {
    /// Assembles a mesh from raw parts and checks the structural invariants:
    /// positive counter-clockwise triangles, in-range indices, manifold edges
    /// and no hanging nodes.
    pub fn from_parts(
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        subdomains: Vec<Subdomain>,
        edges: Vec<TaggedEdge>,
        contacts: Vec<ContactSegment>,
    ) -> Result<Self, MeshError> {
        if triangles.len() != subdomains.len() {
            return Err(MeshError::Invalid(format!(
                "{} triangles but {} subdomain tags",
                triangles.len(),
                subdomains.len()
            )));
        }
        if triangles.is_empty() {
            return Err(MeshError::Invalid("no triangles".into()));
        }
        let nv = vertices.len();
        for (k, t) in triangles.iter().enumerate() {
            if t.iter().any(|&i| i >= nv) {
                return Err(MeshError::Invalid(format!("triangle {k} references a missing vertex")));
            }
            let area = signed_area(&vertices, *t);
            if !(area > 0.0) {
                return Err(MeshError::DegenerateTriangle { triangle: k, area });
            }
        }
        for e in &edges {
            if e.nodes.iter().any(|&i| i >= nv) {
                return Err(MeshError::Invalid("tagged edge references a missing vertex".into()));
            }
            if let EdgeTag::Contact(c) = e.tag {
                if c >= contacts.len() {
                    return Err(MeshError::Invalid(format!("edge tagged with unknown contact {c}")));
                }
            }
        }
        let h = triangles.iter().map(|t| diameter(&vertices, *t)).fold(0.0_f64, f64::max);
        let mesh = Self {
            vertices,
            triangles,
            subdomains,
            edges,
            contacts,
            h,
            level: 0,
            target_h: h,
            layout: None,
            locator: OnceLock::new(),
        };
        mesh.check_conforming()?;
        Ok(mesh)
    }

    pub(crate) fn with_layout(mut self, layout: LayeredDomain, target_h: f64, level: usize) -> Self {
        self.layout = Some(layout);
        self.target_h = target_h;
        self.level = level;
        self
    }

    fn check_conforming(&self) -> Result<(), MeshError> {
        let mut count: HashMap<(usize, usize), u32> = HashMap::new();
        for t in &self.triangles {
            for (a, b) in local_edges(*t) {
                *count.entry(edge_key(a, b)).or_default() += 1;
            }
        }
        if let Some(((a, b), n)) = count.iter().find(|(_, &n)| n > 2) {
            return Err(MeshError::Invalid(format!("edge ({a},{b}) shared by {n} triangles")));
        }
        let mut used = vec![false; self.vertices.len()];
        for t in &self.triangles {
            for &i in t {
                used[i] = true;
            }
        }
        if used.iter().any(|u| !u) {
            return Err(MeshError::Invalid("unused vertex".into()));
        }
        // Simply connected domain: V - E + F = 1. A hanging node breaks this.
        let euler = self.vertices.len() as i64 - count.len() as i64 + self.triangles.len() as i64;
        if euler != 1 {
            return Err(MeshError::Invalid(format!(
                "Euler characteristic {euler} (expected 1): mesh has hanging nodes or holes"
            )));
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn subdomains(&self) -> &[Subdomain] {
        &self.subdomains
    }

    pub fn tagged_edges(&self) -> &[TaggedEdge] {
        &self.edges
    }

    pub fn contacts(&self) -> &[ContactSegment] {
        &self.contacts
    }

    pub fn contact_index(&self, name: &str) -> Option<usize> {
        self.contacts.iter().position(|c| c.name == name)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Mesh size: the largest triangle diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// The size that was requested when this mesh was generated.
    pub fn target_h(&self) -> f64 {
        self.target_h
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn layout(&self) -> Option<&LayeredDomain> {
        self.layout.as_ref()
    }

    pub fn area(&self, k: usize) -> f64 {
        signed_area(&self.vertices, self.triangles[k])
    }

    pub fn centroid(&self, k: usize) -> [f64; 2] {
        let [a, b, c] = self.triangles[k];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        [(pa[0] + pb[0] + pc[0]) / 3.0, (pa[1] + pb[1] + pc[1]) / 3.0]
    }

    pub fn diameter(&self, k: usize) -> f64 {
        diameter(&self.vertices, self.triangles[k])
    }

    /// Total area of the triangles in `sub`.
    pub fn subdomain_area(&self, sub: Subdomain) -> f64 {
        (0..self.triangles.len()).filter(|&k| self.subdomains[k] == sub).map(|k| self.area(k)).sum()
    }

    /// For every vertex, the lowest index of a contact it lies on.
    pub fn node_contacts(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.vertices.len()];
        for e in &self.edges {
            if let EdgeTag::Contact(c) = e.tag {
                for &n in &e.nodes {
                    out[n] = Some(out[n].map_or(c, |o: usize| o.min(c)));
                }
            }
        }
        out
    }

    /// Whether each vertex belongs to at least one triangle of `sub`.
    pub fn nodes_in(&self, sub: Subdomain) -> Vec<bool> {
        let mut out = vec![false; self.vertices.len()];
        for (t, s) in self.triangles.iter().zip(&self.subdomains) {
            if *s == sub {
                for &i in t {
                    out[i] = true;
                }
            }
        }
        out
    }

    /// Triangle containing `p` and the barycentric coordinates of `p` in it.
    pub fn locate(&self, p: [f64; 2]) -> Option<(usize, [f64; 3])> {
        self.locator.get_or_init(|| Locator::new(self)).locate(self, p)
    }
}

pub(crate) fn local_edges(t: [usize; 3]) -> [(usize, usize); 3] {
    [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])]
}

pub(crate) fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

pub(crate) fn signed_area(v: &[[f64; 2]], t: [usize; 3]) -> f64 {
    let (a, b, c) = (v[t[0]], v[t[1]], v[t[2]]);
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn diameter(v: &[[f64; 2]], t: [usize; 3]) -> f64 {
    let (a, b, c) = (v[t[0]], v[t[1]], v[t[2]]);
    dist(a, b).max(dist(b, c)).max(dist(c, a))
}

/// Largest ratio `h_K / rho_K` of triangle diameter to inradius.
pub fn shape_regularity(mesh: &TriMesh) -> Result<f64, MeshError> {
    let v = mesh.vertices();
    let mut worst = 0.0_f64;
    for (k, &t) in mesh.triangles().iter().enumerate() {
        let (a, b, c) = (v[t[0]], v[t[1]], v[t[2]]);
        let perimeter = dist(a, b) + dist(b, c) + dist(c, a);
        let area = signed_area(v, t).abs();
        if !(area > f64::EPSILON * perimeter * perimeter) {
            return Err(MeshError::DegenerateTriangle { triangle: k, area });
        }
        let inradius = 2.0 * area / perimeter;
        worst = worst.max(diameter(v, t) / inradius);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(v: Vec<[f64; 2]>) -> Result<TriMesh, MeshError> {
        TriMesh::from_parts(v, vec![[0, 1, 2]], vec![Subdomain::Silicon], vec![], vec![])
    }

    #[test]
    fn equilateral_ratio_is_two_root_three() {
        let m = single(vec![[0.0, 0.0], [1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]]).unwrap();
        let r = shape_regularity(&m).unwrap();
        assert!((r - 2.0 * 3f64.sqrt()).abs() < 1e-12, "{r}");
    }

    #[test]
    fn right_isosceles_ratio_matches_inradius_formula() {
        let m = single(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        // Inradius of a right triangle: (a + b - c) / 2.
        let rho = (1.0 + 1.0 - 2f64.sqrt()) / 2.0;
        let expected = 2f64.sqrt() / rho;
        assert!((shape_regularity(&m).unwrap() - expected).abs() < 1e-12);
        assert!(expected >= 2.0 / 3f64.sqrt());
    }

    #[test]
    fn clockwise_or_flat_triangles_are_rejected() {
        let cw = single(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]);
        assert!(matches!(cw, Err(MeshError::DegenerateTriangle { .. })));
        let flat = single(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]);
        assert!(matches!(flat, Err(MeshError::DegenerateTriangle { .. })));
    }

    #[test]
    fn hanging_node_is_detected() {
        // Left triangle A B C, right side split at the midpoint M of BC.
        let v = vec![[0.0, 0.5], [1.0, 0.0], [1.0, 1.0], [2.0, 0.5], [1.0, 0.5]];
        let tris = vec![[0, 1, 2], [1, 3, 4], [4, 3, 2]];
        let subs = vec![Subdomain::Silicon; 3];
        let err = TriMesh::from_parts(v.clone(), tris, subs, vec![], vec![]).unwrap_err();
        assert!(matches!(err, MeshError::Invalid(_)));
        let ok = vec![[0, 1, 4], [0, 4, 2], [1, 3, 4], [4, 3, 2]];
        TriMesh::from_parts(v, ok, vec![Subdomain::Silicon; 4], vec![], vec![]).unwrap();
    }
}
