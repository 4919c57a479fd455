use serde::{Deserialize, Serialize};

use super::boundary::BoundaryData;
use super::continuity::{assemble_continuity, gather, Carrier};
use super::fields::SolutionFields;
use super::params::PhysicalParams;
use super::space::Discretization;
use super::FemError;

/// Scalar functional of a converged solution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum QoiKind {
    /// Area average of `V` over silicon (V).
    #[default]
    MeanPotential,
    /// Mean outward normal field `-∂V/∂n` on the silicon side of the boundary
    /// between silicon and the other subdomains (V/nm).
    SurfaceField,
    /// Total current `J_n + J_p` leaving through the named contact (A/µm of depth).
    ContactFlux(String),
}

pub fn evaluate_qoi(
    fields: &SolutionFields,
    disc: &Discretization,
    params: &PhysicalParams,
    bc: &BoundaryData,
    kind: &QoiKind,
) -> Result<f64, FemError> {
    match kind {
        QoiKind::MeanPotential => Ok(mean_potential(disc, &fields.potential)),
        QoiKind::SurfaceField => Ok(surface_field(disc, &fields.potential)),
        QoiKind::ContactFlux(name) => Ok(contact_current(fields, disc, params, bc, name)?.current),
    }
}

/// `∫_Si V / |Si|` with exact P1 quadrature.
pub fn mean_potential(disc: &Discretization, potential: &[f64]) -> f64 {
    let mut acc = 0.0;
    let mut comp = 0.0;
    for (m, x) in disc.mass_si().iter().zip(potential) {
        let y = m * x - comp;
        let t = acc + y;
        comp = (t - acc) - y;
        acc = t;
    }
    acc / disc.si_area()
}

/// Length-weighted mean of `-∇V_h · n` over the silicon surface, using the
/// gradient of the adjacent silicon triangle.
pub fn surface_field(disc: &Discretization, potential: &[f64]) -> f64 {
    let mut flux = 0.0;
    let mut len = 0.0;
    for &(k, n) in disc.si_surface() {
        let g = disc.gradient(k, potential);
        flux -= g[0] * n[0] + g[1] * n[1];
        len += n[0].hypot(n[1]);
    }
    if len > 0.0 {
        flux / len
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactCurrent {
    /// Net current out of the device through the contact (A/µm).
    pub current: f64,
    /// Sum of the magnitudes of the contributing terms, same unit.
    pub scale: f64,
}

/// Current through a contact from the residuals of the continuity equations
/// on its nodes.
pub fn contact_current(
    fields: &SolutionFields,
    disc: &Discretization,
    params: &PhysicalParams,
    bc: &BoundaryData,
    name: &str,
) -> Result<ContactCurrent, FemError> {
    let c = disc.mesh().contact_index(name).ok_or_else(|| FemError::Config(format!("unknown contact '{name}'")))?;
    if bc.contacts[c].ohmic.is_none() {
        return Ok(ContactCurrent { current: 0.0, scale: 0.0 });
    }
    // q n_i per nm³, times 1e3 nm per µm of depth.
    let unit = params.q * params.n_i * 1e-21 * 1e3;
    let mut current = 0.0;
    let mut scale = 0.0;
    for (carrier, sign) in [(Carrier::N, 1.0), (Carrier::P, -1.0)] {
        let sys = assemble_continuity(disc, &fields.potential, carrier, &fields.u, &fields.v, params, bc)?;
        let w = match carrier {
            Carrier::N => gather(disc, &fields.u),
            Carrier::P => gather(disc, &fields.v),
        };
        let aw = sys.apply(&w);
        let abs = sys.raw.abs_mul(&w);
        for (l, &g) in disc.si_nodes().iter().enumerate() {
            if disc.node_contact()[g] == Some(c) {
                current += sign * unit * (aw[l] - sys.raw_rhs[l]);
                scale += unit * (abs[l] + sys.raw_rhs[l].abs());
            }
        }
    }
    Ok(ContactCurrent { current, scale })
}
