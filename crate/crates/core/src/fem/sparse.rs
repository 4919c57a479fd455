//! Symmetric sparse matrices on a fixed P1 pattern and their Cholesky solves.

use std::sync::OnceLock;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::Side;

use super::FemError;

/// Column-compressed pattern (both triangles stored) of a P1 operator on a
/// set of triangles, plus the value slot of every element-local entry.
#[derive(Debug)]
pub struct Pattern {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    diag: Vec<usize>,
    element_slots: Vec<[usize; 9]>,
    symbolic: OnceLock<Result<SymbolicLlt<usize>, String>>,
}

impl Pattern {
    /// `elements` holds local (already renumbered) vertex triples.
    pub fn new(n: usize, elements: &[[usize; 3]]) -> Self {
        let mut cols: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for e in elements {
            for &a in e {
                for &b in e {
                    cols[b].push(a);
                }
            }
        }
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        col_ptr.push(0);
        for c in cols.iter_mut() {
            c.sort_unstable();
            c.dedup();
            row_idx.extend_from_slice(c);
            col_ptr.push(row_idx.len());
        }
        let mut pattern =
            Self { n, col_ptr, row_idx, diag: Vec::new(), element_slots: Vec::new(), symbolic: OnceLock::new() };
        pattern.diag = (0..n).map(|i| pattern.slot(i, i)).collect();
        pattern.element_slots = elements
            .iter()
            .map(|e| {
                let mut s = [0usize; 9];
                for a in 0..3 {
                    for b in 0..3 {
                        s[3 * a + b] = pattern.slot(e[a], e[b]);
                    }
                }
                s
            })
            .collect();
        pattern
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    fn slot(&self, row: usize, col: usize) -> usize {
        let range = self.col_ptr[col]..self.col_ptr[col + 1];
        let off = self.row_idx[range.clone()].binary_search(&row).expect("entry outside pattern");
        range.start + off
    }

    pub fn find(&self, row: usize, col: usize) -> Option<usize> {
        let range = self.col_ptr[col]..self.col_ptr[col + 1];
        self.row_idx[range.clone()].binary_search(&row).ok().map(|o| range.start + o)
    }

    pub fn diag_slot(&self, i: usize) -> usize {
        self.diag[i]
    }

    pub fn element_slots(&self, e: usize) -> &[usize; 9] {
        &self.element_slots[e]
    }

    pub fn zeros(&self) -> SymMatrix<'_> {
        SymMatrix { pattern: self, values: vec![0.0; self.row_idx.len()] }
    }

    fn symbolic_ref(&self) -> SymbolicSparseColMatRef<'_, usize> {
        SymbolicSparseColMatRef::new_checked(self.n, self.n, &self.col_ptr, None, &self.row_idx)
    }

    fn symbolic_llt(&self) -> Result<SymbolicLlt<usize>, FemError> {
        self.symbolic
            .get_or_init(|| SymbolicLlt::try_new(self.symbolic_ref(), Side::Lower).map_err(|e| format!("{e:?}")))
            .clone()
            .map_err(FemError::LinearSolver)
    }
}

/// Values on a [`Pattern`]. Symmetric by construction of the callers.
#[derive(Debug, Clone)]
pub struct SymMatrix<'p> {
    pattern: &'p Pattern,
    pub values: Vec<f64>,
}

impl<'p> SymMatrix<'p> {
    pub fn pattern(&self) -> &'p Pattern {
        self.pattern
    }

    pub fn add_element(&mut self, e: usize, local: &[[f64; 3]; 3]) {
        let slots = self.pattern.element_slots(e);
        for a in 0..3 {
            for b in 0..3 {
                self.values[slots[3 * a + b]] += local[a][b];
            }
        }
    }

    /// Adds `c (e_a − e_b)(e_a − e_b)ᵀ`.
    pub fn add_edge(&mut self, a: usize, b: usize, c: f64) {
        let p = self.pattern;
        let ab = p.find(a, b).expect("edge in pattern");
        let ba = p.find(b, a).expect("edge in pattern");
        self.values[ab] -= c;
        self.values[ba] -= c;
        self.values[p.diag_slot(a)] += c;
        self.values[p.diag_slot(b)] += c;
    }

    pub fn add_diag(&mut self, i: usize, v: f64) {
        let s = self.pattern.diag_slot(i);
        self.values[s] += v;
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pattern.find(row, col).map_or(0.0, |s| self.values[s])
    }

    /// `y = A x`.
    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let p = self.pattern;
        let mut y = vec![0.0; p.n];
        for c in 0..p.n {
            let xc = x[c];
            for s in p.col_ptr[c]..p.col_ptr[c + 1] {
                y[p.row_idx[s]] += self.values[s] * xc;
            }
        }
        y
    }

    /// `y_i = c_i x_i + Σ_{j≠i} A_ij (x_j - x_i)`, i.e. `A x` for a matrix
    /// whose diagonal is `c_i - Σ_{j≠i} A_ij`, without the cancellation of
    /// the product form when `x` is nearly constant.
    pub fn mul_difference_form(&self, c: &[f64], x: &[f64]) -> Vec<f64> {
        let p = self.pattern;
        let mut y: Vec<f64> = c.iter().zip(x).map(|(a, b)| a * b).collect();
        for col in 0..p.n {
            for s in p.col_ptr[col]..p.col_ptr[col + 1] {
                let r = p.row_idx[s];
                if r != col {
                    y[r] += self.values[s] * (x[col] - x[r]);
                }
            }
        }
        y
    }

    /// Row sums of `|A_ij| |x_j|`.
    pub fn abs_mul(&self, x: &[f64]) -> Vec<f64> {
        let p = self.pattern;
        let mut y = vec![0.0; p.n];
        for c in 0..p.n {
            let xc = x[c].abs();
            for s in p.col_ptr[c]..p.col_ptr[c + 1] {
                y[p.row_idx[s]] += self.values[s].abs() * xc;
            }
        }
        y
    }

    pub fn max_asymmetry(&self) -> f64 {
        let p = self.pattern;
        let mut worst = 0.0_f64;
        for c in 0..p.n {
            for s in p.col_ptr[c]..p.col_ptr[c + 1] {
                let r = p.row_idx[s];
                let t = self.get(c, r);
                let scale = self.values[s].abs().max(t.abs()).max(f64::MIN_POSITIVE);
                worst = worst.max((self.values[s] - t).abs() / scale);
            }
        }
        worst
    }

    /// Imposes `x_i = fixed_i` on the rows and columns where `fixed_i` is
    /// `Some`: known columns move to `rhs`, and the fixed rows become scaled
    /// identity rows.
    pub fn apply_dirichlet(&mut self, fixed: &[Option<f64>], rhs: &mut [f64]) {
        let p = self.pattern;
        for c in 0..p.n {
            if let Some(g) = fixed[c] {
                for s in p.col_ptr[c]..p.col_ptr[c + 1] {
                    let r = p.row_idx[s];
                    if fixed[r].is_none() {
                        rhs[r] -= self.values[s] * g;
                    }
                }
            }
        }
        self.clear_rows(|i| fixed[i].is_some());
        for (i, f) in fixed.iter().enumerate() {
            if let Some(g) = f {
                rhs[i] = self.values[p.diag[i]] * g;
            }
        }
    }

    /// Replaces rows and columns selected by `is_fixed` with the identity,
    /// scaled to the mean diagonal of the free part.
    pub fn clear_rows(&mut self, is_fixed: impl Fn(usize) -> bool) {
        let p = self.pattern;
        let (mut sum, mut cnt) = (0.0, 0usize);
        for i in 0..p.n {
            if !is_fixed(i) {
                sum += self.values[p.diag[i]].abs();
                cnt += 1;
            }
        }
        let d = if cnt > 0 && sum > 0.0 { sum / cnt as f64 } else { 1.0 };
        for c in 0..p.n {
            let fc = is_fixed(c);
            for s in p.col_ptr[c]..p.col_ptr[c + 1] {
                let r = p.row_idx[s];
                if fc || is_fixed(r) {
                    self.values[s] = if r == c { d } else { 0.0 };
                }
            }
        }
    }

    /// Sparse Cholesky factorization. With `equilibrate`, the matrix is first
    /// scaled symmetrically to unit diagonal.
    pub fn cholesky(&self, equilibrate: bool) -> Result<Cholesky, FemError> {
        self.cholesky_shifted(equilibrate, 0.0)
    }

    /// Cholesky factor of the (equilibrated) matrix plus `shift · I`.
    pub fn cholesky_shifted(&self, equilibrate: bool, shift: f64) -> Result<Cholesky, FemError> {
        let p = self.pattern;
        faer::set_global_parallelism(faer::Par::Seq);
        let symbolic = p.symbolic_llt()?;
        let scale: Option<Vec<f64>> = equilibrate.then(|| {
            p.diag
                .iter()
                .map(|&s| {
                    let d = self.values[s];
                    if d > 0.0 {
                        1.0 / d.sqrt()
                    } else {
                        1.0
                    }
                })
                .collect()
        });
        let mut vals = self.values.clone();
        if let Some(sc) = &scale {
            for c in 0..p.n {
                for s in p.col_ptr[c]..p.col_ptr[c + 1] {
                    vals[s] *= sc[p.row_idx[s]] * sc[c];
                }
            }
        }
        for &d in &p.diag {
            vals[d] += shift;
        }
        let llt = factor(symbolic, p, &vals)?;
        Ok(Cholesky { llt, scale })
    }

    pub fn solve(&self, rhs: &[f64], equilibrate: bool) -> Result<Vec<f64>, FemError> {
        self.cholesky(equilibrate)?.solve(rhs)
    }

    /// Dense copy, for small test problems.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let p = self.pattern;
        let mut d = vec![vec![0.0; p.n]; p.n];
        for c in 0..p.n {
            for s in p.col_ptr[c]..p.col_ptr[c + 1] {
                d[p.row_idx[s]][c] = self.values[s];
            }
        }
        d
    }
}

/// Factor of a [`SymMatrix`], reusable for several right-hand sides.
pub struct Cholesky {
    llt: Llt<usize, f64>,
    scale: Option<Vec<f64>>,
}

impl std::fmt::Debug for Cholesky {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Cholesky").field("equilibrated", &self.scale.is_some()).finish()
    }
}

impl Cholesky {
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, FemError> {
        let mut x = rhs.to_vec();
        if let Some(sc) = &self.scale {
            for (xi, si) in x.iter_mut().zip(sc) {
                *xi *= si;
            }
        }
        self.llt.solve_in_place(faer::ColMut::from_slice_mut(&mut x));
        if let Some(sc) = &self.scale {
            for (xi, si) in x.iter_mut().zip(sc) {
                *xi *= si;
            }
        }
        check_finite(x)
    }
}

fn factor(symbolic: SymbolicLlt<usize>, p: &Pattern, values: &[f64]) -> Result<Llt<usize, f64>, FemError> {
    let mat = SparseColMatRef::new(p.symbolic_ref(), values);
    Llt::try_new_with_symbolic(symbolic, mat, Side::Lower)
        .map_err(|e| FemError::LinearSolver(format!("Cholesky factorization failed: {e:?}")))
}

fn check_finite(x: Vec<f64>) -> Result<Vec<f64>, FemError> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(FemError::LinearSolver("non-finite solution".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_triangle_laplacian_with_dirichlet() {
        // Unit square, nodes 0..4, diagonal 0-2.
        let p = Pattern::new(4, &[[0, 1, 2], [0, 2, 3]]);
        assert_eq!(p.nnz(), 14);
        let mut a = p.zeros();
        // Right angle at node 1 for the first element and node 3 for the second.
        a.add_element(0, &[[0.5, -0.5, 0.0], [-0.5, 1.0, -0.5], [0.0, -0.5, 0.5]]);
        a.add_element(1, &[[0.5, 0.0, -0.5], [0.0, 0.5, -0.5], [-0.5, -0.5, 1.0]]);
        assert!(a.max_asymmetry() < 1e-15);
        let mut rhs = vec![0.0; 4];
        a.apply_dirichlet(&[Some(1.0), None, Some(3.0), None], &mut rhs);
        let x = a.solve(&rhs, false).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[2] - 3.0).abs() < 1e-12);
        assert!((x[1] - 2.0).abs() < 1e-12 && (x[3] - 2.0).abs() < 1e-12);
        let y = a.solve(&rhs, true).unwrap();
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-12);
        }
    }
}
