use serde::{Deserialize, Serialize};

use super::dopants::DopantSample;
use super::StochasticError;
use crate::fem::{subdomain_permittivity, Discretization, PhysicalParams, SampleFields};
use crate::mesh::Subdomain;

/// How a dopant perturbs the coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DopantModel {
    /// Depth (nm) that converts a volume concentration into a 2D count.
    pub depth: f64,
    /// Influence radius (nm) for the permittivity; the charge bump has
    /// standard deviation `r_dop / 2`, truncated at three deviations.
    pub r_dop: f64,
    pub quad_rings: usize,
    pub quad_angles: usize,
}

impl Default for DopantModel {
    fn default() -> Self {
        Self { depth: 60.0, r_dop: 1.0, quad_rings: 12, quad_angles: 24 }
    }
}

impl DopantModel {
    pub fn validate(&self) -> Result<(), StochasticError> {
        if !(self.depth > 0.0 && self.depth.is_finite() && self.r_dop > 0.0 && self.r_dop.is_finite()) {
            return Err(StochasticError::Config("depth and r_dop must be positive".into()));
        }
        if self.quad_rings == 0 || self.quad_angles < 3 {
            return Err(StochasticError::Config("bump quadrature needs rings >= 1 and angles >= 3".into()));
        }
        Ok(())
    }

    /// Integral of one dopant's concentration over the cross-section
    /// (cm⁻³·nm²).
    pub fn charge_per_dopant(&self) -> f64 {
        1e21 / self.depth
    }

    /// Quadrature of the normalized truncated Gaussian: offsets and weights
    /// summing to one.
    fn bump_rule(&self) -> Vec<([f64; 2], f64)> {
        let sigma = 0.5 * self.r_dop;
        let rmax = 3.0 * sigma;
        let dr = rmax / self.quad_rings as f64;
        let dth = std::f64::consts::TAU / self.quad_angles as f64;
        let mut pts = Vec::with_capacity(self.quad_rings * self.quad_angles);
        for j in 0..self.quad_rings {
            let r = (j as f64 + 0.5) * dr;
            let w = (-0.5 * (r / sigma).powi(2)).exp() * r * dr * dth;
            for k in 0..self.quad_angles {
                // Stagger alternate rings to spread the points.
                let th = (k as f64 + 0.5 * (j % 2) as f64) * dth;
                pts.push(([r * th.cos(), r * th.sin()], w));
            }
        }
        let total: f64 = pts.iter().map(|p| p.1).sum();
        for p in &mut pts {
            p.1 /= total;
        }
        pts
    }
}

/// Permittivity per triangle and doping load per node for one sample.
/// Quadrature points of a bump that fall outside silicon are dropped and the
/// rest renormalized, so each dopant carries its full charge on any mesh.
pub fn realize_fields(
    sample: &DopantSample,
    disc: &Discretization,
    params: &PhysicalParams,
    model: &DopantModel,
) -> Result<SampleFields, StochasticError> {
    model.validate()?;
    let mesh = disc.mesh();
    let mut permittivity = subdomain_permittivity(disc, params);
    let mut doping_load = vec![0.0; disc.num_nodes()];
    let rule = model.bump_rule();
    let q = model.charge_per_dopant();
    let si = |k: usize| mesh.subdomains()[k] == Subdomain::Silicon;

    for (d, (pos, sign)) in sample.positions.iter().zip(&sample.charge_sign).enumerate() {
        let (home, _) = mesh
            .locate(*pos)
            .filter(|(k, _)| si(*k))
            .ok_or_else(|| StochasticError::Sampling(format!("dopant {d} at {pos:?} is outside the silicon mesh")))?;
        permittivity[home] = params.a_dop;

        let mut hits: Vec<(usize, [f64; 3], f64)> = Vec::with_capacity(rule.len());
        let mut kept = 0.0;
        for (off, w) in &rule {
            let p = [pos[0] + off[0], pos[1] + off[1]];
            if let Some((k, bary)) = mesh.locate(p) {
                if si(k) {
                    hits.push((k, bary, *w));
                    kept += w;
                }
            }
        }
        if hits.is_empty() {
            // Bump smaller than every triangle around it: lump at the home element.
            let (k, bary) = mesh.locate(*pos).expect("located above");
            hits.push((k, bary, 1.0));
            kept = 1.0;
        }
        let scale = sign * q / kept;
        for (k, bary, w) in hits {
            let t = mesh.triangles()[k];
            for a in 0..3 {
                doping_load[t[a]] += scale * w * bary[a];
            }
        }
    }

    let r2 = model.r_dop * model.r_dop;
    for k in 0..mesh.num_triangles() {
        if !si(k) || permittivity[k] == params.a_dop {
            continue;
        }
        let c = mesh.centroid(k);
        if sample.positions.iter().any(|p| (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) <= r2) {
            permittivity[k] = params.a_dop;
        }
    }
    Ok(SampleFields { permittivity, doping_load })
}
