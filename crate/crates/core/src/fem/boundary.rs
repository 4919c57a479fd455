use serde::{Deserialize, Serialize};

use super::params::PhysicalParams;
use super::FemError;
use crate::mesh::{Subdomain, TriMesh};

/// Dirichlet data of an Ohmic contact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OhmicValues {
    pub n_d: f64,
    pub p_d: f64,
    pub v1: f64,
    pub u_d: f64,
    pub v_d: f64,
}

/// Equilibrium, charge-neutral carrier densities and Slotboom data at a
/// contact with local net doping `c_dop` and applied voltage `u`.
pub fn ohmic_boundary_values(c_dop: f64, u: f64, params: &PhysicalParams) -> OhmicValues {
    let ni = params.n_i;
    let root = (c_dop * c_dop + 4.0 * ni * ni).sqrt();
    // Pick the cancellation-free branch for the majority carrier.
    let (n_d, p_d) = if c_dop >= 0.0 {
        let n = 0.5 * (c_dop + root);
        (n, ni * ni / n)
    } else {
        let p = 0.5 * (root - c_dop);
        (ni * ni / p, p)
    };
    let v1 = u + params.u_t * (n_d / ni).ln();
    let u_d = n_d / ni * (-v1 / params.u_t).exp();
    let v_d = p_d / ni * (v1 / params.u_t).exp();
    OhmicValues { n_d, p_d, v1, u_d, v_d }
}

/// Dirichlet data for one contact of the mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactData {
    pub name: String,
    pub voltage: f64,
    /// Potential imposed on the contact nodes.
    pub v1: f64,
    /// Carrier data, present when the contact touches silicon.
    pub ohmic: Option<OhmicValues>,
}

/// Boundary data of all contacts plus the constant `K` bounding u and v.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryData {
    pub contacts: Vec<ContactData>,
    pub k: f64,
}

impl BoundaryData {
    /// Ohmic data uses the nominal net doping; contacts that touch no silicon
    /// node only fix the potential.
    pub fn from_mesh(mesh: &TriMesh, params: &PhysicalParams) -> Self {
        let in_si = mesh.nodes_in(Subdomain::Silicon);
        let mut touches = vec![false; mesh.contacts().len()];
        for e in mesh.tagged_edges() {
            if let crate::mesh::EdgeTag::Contact(c) = e.tag {
                if e.nodes.iter().all(|&n| in_si[n]) {
                    touches[c] = true;
                }
            }
        }
        let contacts = mesh
            .contacts()
            .iter()
            .zip(&touches)
            .map(|(c, &si)| {
                if si {
                    let o = ohmic_boundary_values(params.net_doping(), c.voltage, params);
                    ContactData { name: c.name.clone(), voltage: c.voltage, v1: o.v1, ohmic: Some(o) }
                } else {
                    ContactData { name: c.name.clone(), voltage: c.voltage, v1: c.voltage, ohmic: None }
                }
            })
            .collect::<Vec<_>>();
        let k = contacts
            .iter()
            .filter_map(|c| c.ohmic)
            .map(|o| o.u_d.max(o.v_d).max(1.0 / o.u_d).max(1.0 / o.v_d))
            .fold(1.0, f64::max);
        Self { contacts, k }
    }

    pub fn has_carrier_contact(&self) -> bool {
        self.contacts.iter().any(|c| c.ohmic.is_some())
    }

    pub fn contact(&self, name: &str) -> Result<&ContactData, FemError> {
        self.contacts
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| FemError::Config(format!("unknown contact '{name}'")))
    }
}

/// A-priori bounds on the solution from the boundary and doping data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinftyBounds {
    pub v_min: f64,
    pub v_max: f64,
    pub k: f64,
}

impl LinftyBounds {
    /// `vd_range` is the range of Dirichlet potentials, `c_range` the range of
    /// the doping over silicon and `vl_range` the range of the interface lift.
    pub fn new(
        params: &PhysicalParams,
        k: f64,
        vd_range: (f64, f64),
        c_range: (f64, f64),
        vl_range: (f64, f64),
    ) -> Self {
        let ni = params.n_i;
        let ut = params.u_t;
        let (c_lo, c_hi) = c_range;
        let (vl_lo, vl_hi) = vl_range;
        // (C + sqrt(C² + 4 n_i²)) / (2 n_i) evaluated without cancellation.
        let neutral = |c: f64| {
            let r = (c * c + 4.0 * ni * ni).sqrt();
            if c >= 0.0 {
                (c + r) / (2.0 * ni)
            } else {
                2.0 * ni / (r - c)
            }
        };
        let v_min = vd_range.0.min(params.phi - vl_hi).min(ut * (neutral(c_lo) / k).ln() - vl_hi);
        let v_max = vd_range.1.max(params.phi - vl_lo).max(ut * (k * neutral(c_hi)).ln() - vl_lo);
        Self { v_min, v_max, k }
    }
}
