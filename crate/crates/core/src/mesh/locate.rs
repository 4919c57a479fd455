use super::trimesh::TriMesh;

/// Uniform bucket grid over the mesh bounding box.
#[derive(Debug)]
pub(crate) struct Locator {
    origin: [f64; 2],
    cell: [f64; 2],
    dims: [usize; 2],
    buckets: Vec<Vec<u32>>,
}

const BARY_TOL: f64 = 1e-12;

impl Locator {
    pub(crate) fn new(mesh: &TriMesh) -> Self {
        let v = mesh.vertices();
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in v {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let nt = mesh.num_triangles().max(1);
        let side = (nt as f64).sqrt().ceil().max(1.0) as usize;
        let dims = [side, side];
        let cell = [
            ((hi[0] - lo[0]) / side as f64).max(f64::MIN_POSITIVE),
            ((hi[1] - lo[1]) / side as f64).max(f64::MIN_POSITIVE),
        ];
        let mut buckets = vec![Vec::new(); side * side];
        for (k, t) in mesh.triangles().iter().enumerate() {
            let mut tlo = [f64::INFINITY; 2];
            let mut thi = [f64::NEG_INFINITY; 2];
            for &i in t {
                for d in 0..2 {
                    tlo[d] = tlo[d].min(v[i][d]);
                    thi[d] = thi[d].max(v[i][d]);
                }
            }
            let (i0, j0) = Self::cell_of(lo, cell, dims, tlo);
            let (i1, j1) = Self::cell_of(lo, cell, dims, thi);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * dims[0] + i].push(k as u32);
                }
            }
        }
        Self { origin: lo, cell, dims, buckets }
    }

    fn cell_of(origin: [f64; 2], cell: [f64; 2], dims: [usize; 2], p: [f64; 2]) -> (usize, usize) {
        let f = |d: usize| {
            let x = ((p[d] - origin[d]) / cell[d]).floor();
            (x.max(0.0) as usize).min(dims[d] - 1)
        };
        (f(0), f(1))
    }

    pub(crate) fn locate(&self, mesh: &TriMesh, p: [f64; 2]) -> Option<(usize, [f64; 3])> {
        if !(p[0].is_finite() && p[1].is_finite()) {
            return None;
        }
        let (i, j) = Self::cell_of(self.origin, self.cell, self.dims, p);
        let v = mesh.vertices();
        for &k in &self.buckets[j * self.dims[0] + i] {
            let t = mesh.triangles()[k as usize];
            let (a, b, c) = (v[t[0]], v[t[1]], v[t[2]]);
            let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
            let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
            let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
            let l0 = 1.0 - l1 - l2;
            if l0 >= -BARY_TOL && l1 >= -BARY_TOL && l2 >= -BARY_TOL {
                return Some((k as usize, [l0, l1, l2]));
            }
        }
        None
    }
}
