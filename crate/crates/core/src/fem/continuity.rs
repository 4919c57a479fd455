use serde::{Deserialize, Serialize};

use super::boundary::BoundaryData;
use super::params::PhysicalParams;
use super::space::{sg_weight, Discretization};
use super::sparse::SymMatrix;
use super::FemError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Carrier {
    /// Electrons, Slotboom variable `u`.
    N,
    /// Holes, Slotboom variable `v`.
    P,
}

/// Linear system of one continuity equation on the silicon nodes, with the
/// SRH denominator frozen at `(u0, v0)`.
#[derive(Debug, Clone)]
pub struct ContinuitySystem<'a> {
    pub matrix: SymMatrix<'a>,
    pub rhs: Vec<f64>,
    /// Matrix before Dirichlet elimination, kept for contact fluxes.
    pub raw: SymMatrix<'a>,
    pub raw_rhs: Vec<f64>,
    /// Lumped reaction coefficient per node.
    pub reaction: Vec<f64>,
    pub fixed: Vec<Option<f64>>,
}

/// Dirichlet values of the Slotboom variable on silicon nodes (local order).
pub fn carrier_dirichlet(
    disc: &Discretization,
    bc: &BoundaryData,
    carrier: Carrier,
) -> Result<Vec<Option<f64>>, FemError> {
    let fixed: Vec<Option<f64>> = disc
        .si_nodes()
        .iter()
        .map(|&g| {
            disc.node_contact()[g].and_then(|c| bc.contacts[c].ohmic).map(|o| match carrier {
                Carrier::N => o.u_d,
                Carrier::P => o.v_d,
            })
        })
        .collect();
    if fixed.iter().all(Option::is_none) {
        return Err(FemError::Config(format!("the {carrier:?}-continuity equation has no Ohmic contact on silicon")));
    }
    Ok(fixed)
}

pub fn assemble_continuity<'a>(
    disc: &'a Discretization,
    potential: &[f64],
    carrier: Carrier,
    u0: &[f64],
    v0: &[f64],
    params: &PhysicalParams,
    bc: &BoundaryData,
) -> Result<ContinuitySystem<'a>, FemError> {
    let fixed = carrier_dirichlet(disc, bc, carrier)?;
    let (diff, sign) = match carrier {
        Carrier::N => (params.diffusivity_n(), 1.0),
        Carrier::P => (params.diffusivity_p(), -1.0),
    };
    let mut a = disc.si_pattern().zeros();
    let nodes = disc.si_nodes();
    for edge in disc.si_edges() {
        let (ga, gb) = (nodes[edge.a], nodes[edge.b]);
        let c = edge.weight * diff * sg_weight(sign * potential[ga] / params.u_t, sign * potential[gb] / params.u_t);
        a.add_edge(edge.a, edge.b, c);
    }
    let mut rhs = vec![0.0; disc.si_nodes().len()];
    let mut reaction = vec![0.0; disc.si_nodes().len()];
    for (l, &g) in disc.si_nodes().iter().enumerate() {
        let psi = potential[g] / params.u_t;
        let den = params.tau_p * (psi.min(700.0).exp() * u0[g] + 1.0)
            + params.tau_n * ((-psi).min(700.0).exp() * v0[g] + 1.0);
        let m = disc.mass_si()[g];
        let other = match carrier {
            Carrier::N => v0[g],
            Carrier::P => u0[g],
        };
        reaction[l] = m * other / den;
        a.add_diag(l, reaction[l]);
        rhs[l] = m / den;
    }
    let raw = a.clone();
    let raw_rhs = rhs.clone();
    a.apply_dirichlet(&fixed, &mut rhs);
    Ok(ContinuitySystem { matrix: a, rhs, raw, raw_rhs, reaction, fixed })
}

impl ContinuitySystem<'_> {
    /// Unconstrained operator applied to `w` (local order).
    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        self.raw.mul_difference_form(&self.reaction, w)
    }

    pub fn solve(&self) -> Result<Vec<f64>, FemError> {
        let start = vec![0.0; self.rhs.len()];
        self.solve_from(&start)
    }

    /// Conjugate gradients on the difference-form operator, preconditioned
    /// by a Cholesky factor of the equilibrated matrix, or of a slightly
    /// shifted one when the factorization breaks down.
    pub fn solve_from(&self, start: &[f64]) -> Result<Vec<f64>, FemError> {
        let chol = match self.matrix.cholesky(true) {
            Ok(c) => c,
            Err(FemError::LinearSolver(_)) => [1e-14, 1e-12, 1e-10]
                .iter()
                .find_map(|&shift| self.matrix.cholesky_shifted(true, shift).ok())
                .ok_or_else(|| FemError::LinearSolver("continuity matrix is numerically indefinite".into()))?,
            Err(e) => return Err(e),
        };
        let free = |mut v: Vec<f64>| {
            for (x, f) in v.iter_mut().zip(&self.fixed) {
                if f.is_some() {
                    *x = 0.0;
                }
            }
            v
        };
        let residual = |w: &[f64]| free(self.raw_rhs.iter().zip(self.apply(w)).map(|(b, aw)| b - aw).collect());
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

        let mut w: Vec<f64> = start.iter().zip(&self.fixed).map(|(x, f)| f.unwrap_or(*x)).collect();
        let mut r = residual(&w);
        let mut z = free(chol.solve(&r)?);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        for _ in 0..60 {
            let q = free(self.apply(&p));
            let pq = dot(&p, &q);
            if !(pq > 0.0) || rz == 0.0 {
                break;
            }
            let alpha = rz / pq;
            let mut dmax = 0.0_f64;
            for (x, d) in w.iter_mut().zip(&p) {
                *x += alpha * d;
                dmax = dmax.max((alpha * d).abs());
            }
            let wmax = w.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            if dmax <= 1e-15 * wmax {
                break;
            }
            r = residual(&w);
            z = free(chol.solve(&r)?);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for (pi, zi) in p.iter_mut().zip(&z) {
                *pi = zi + beta * *pi;
            }
        }
        if w.iter().any(|x| !x.is_finite()) {
            return Err(FemError::LinearSolver("non-finite continuity solution".into()));
        }
        Ok(w)
    }
}

/// Solves one continuity equation; returns the Slotboom variable on all nodes
/// (zero off silicon).
pub fn solve_continuity(
    disc: &Discretization,
    potential: &[f64],
    carrier: Carrier,
    u0: &[f64],
    v0: &[f64],
    params: &PhysicalParams,
    bc: &BoundaryData,
) -> Result<Vec<f64>, FemError> {
    let sys = assemble_continuity(disc, potential, carrier, u0, v0, params, bc)?;
    let start = match carrier {
        Carrier::N => gather(disc, u0),
        Carrier::P => gather(disc, v0),
    };
    let local = sys.solve_from(&start)?;
    Ok(scatter(disc, &local))
}

pub(crate) fn scatter(disc: &Discretization, local: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; disc.num_nodes()];
    for (l, &g) in disc.si_nodes().iter().enumerate() {
        out[g] = local[l];
    }
    out
}

pub(crate) fn gather(disc: &Discretization, global: &[f64]) -> Vec<f64> {
    disc.si_nodes().iter().map(|&g| global[g]).collect()
}
