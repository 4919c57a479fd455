use serde::{Deserialize, Serialize};

use super::boundary::LinftyBounds;
use super::params::PhysicalParams;
use super::space::Discretization;
use super::FemError;
use crate::mesh::Subdomain;

/// Random coefficients of one realization on one mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleFields {
    /// Relative permittivity per triangle.
    pub permittivity: Vec<f64>,
    /// Doping load `∫ C_dop φ_i` per node (cm⁻³·nm²).
    pub doping_load: Vec<f64>,
}

impl SampleFields {
    /// Subdomain permittivities and the uniform nominal net doping.
    pub fn nominal(disc: &Discretization, params: &PhysicalParams) -> Self {
        Self::uniform(disc, params, params.net_doping())
    }

    pub fn uniform(disc: &Discretization, params: &PhysicalParams, c_dop: f64) -> Self {
        Self {
            permittivity: subdomain_permittivity(disc, params),
            doping_load: disc.mass_si().iter().map(|m| c_dop * m).collect(),
        }
    }

    pub fn validate(&self, disc: &Discretization, params: &PhysicalParams) -> Result<(), FemError> {
        if self.permittivity.len() != disc.mesh().num_triangles() || self.doping_load.len() != disc.num_nodes() {
            return Err(FemError::Assembly("sample fields do not match the mesh".into()));
        }
        let lo = params.a_si.min(params.a_ox).min(params.a_liq).min(params.a_dop);
        let hi = params.a_si.max(params.a_ox).max(params.a_liq).max(params.a_dop);
        if let Some(k) = self.permittivity.iter().position(|a| !(a.is_finite() && *a >= lo && *a <= hi)) {
            return Err(FemError::Assembly(format!(
                "permittivity {} on triangle {k} outside [{lo}, {hi}]",
                self.permittivity[k]
            )));
        }
        if self.doping_load.iter().any(|b| !b.is_finite()) {
            return Err(FemError::Assembly("non-finite doping load".into()));
        }
        Ok(())
    }

    /// Nodal doping density `b_i / m_i` on silicon nodes, zero elsewhere.
    pub fn nodal_doping(&self, disc: &Discretization) -> Vec<f64> {
        self.doping_load.iter().zip(disc.mass_si()).map(|(b, m)| if *m > 0.0 { b / m } else { 0.0 }).collect()
    }
}

pub fn subdomain_permittivity(disc: &Discretization, params: &PhysicalParams) -> Vec<f64> {
    disc.mesh()
        .subdomains()
        .iter()
        .map(|s| match s {
            Subdomain::Silicon => params.a_si,
            Subdomain::Oxide => params.a_ox,
            Subdomain::Liquid => params.a_liq,
        })
        .collect()
}

/// Wall-clock seconds spent in the four work components.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub poisson_assembly: f64,
    pub poisson_solve: f64,
    pub dd_assembly: f64,
    pub dd_solve: f64,
}

impl Timings {
    pub fn total(&self) -> f64 {
        self.poisson_assembly + self.poisson_solve + self.dd_assembly + self.dd_solve
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.poisson_assembly, self.poisson_solve, self.dd_assembly, self.dd_solve]
    }

    pub fn add(&mut self, other: &Timings) {
        self.poisson_assembly += other.poisson_assembly;
        self.poisson_solve += other.poisson_solve;
        self.dd_assembly += other.dd_assembly;
        self.dd_solve += other.dd_solve;
    }
}

/// A bound that failed at some Gummel iterate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub iteration: usize,
    pub quantity: String,
    pub node: usize,
    pub value: f64,
    pub bound: f64,
}

/// Converged nodal fields. `u`, `v`, `n`, `p` are zero off silicon.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionFields {
    pub potential: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub n: Vec<f64>,
    pub p: Vec<f64>,
    pub iterations: usize,
    /// Sup-norm update per Gummel iteration.
    pub history: Vec<f64>,
    pub newton_iterations: usize,
    pub bounds: LinftyBounds,
    pub violations: Vec<Violation>,
    pub timings: Timings,
}
