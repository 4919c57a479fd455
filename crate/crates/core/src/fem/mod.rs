//! Deterministic drift-diffusion-Poisson solver for one realization of the
//! random coefficients.
//!
//! Unknowns are the potential `V` and the Slotboom variables `u`, `v` with
//! `n = n_i e^{V/U_T} u` and `p = n_i e^{-V/U_T} v`. Lengths are in nm and
//! densities in cm⁻³. The Poisson equation is divided by ε0, so the
//! permittivities are relative.

mod boundary;
mod continuity;
mod export;
mod fields;
mod gummel;
mod params;
mod poisson;
mod qoi;
mod space;
pub mod sparse;

pub use boundary::{ohmic_boundary_values, BoundaryData, ContactData, LinftyBounds, OhmicValues};
pub use continuity::{assemble_continuity, carrier_dirichlet, solve_continuity, Carrier, ContinuitySystem};
pub use export::write_fields_csv;
pub use fields::{subdomain_permittivity, SampleFields, SolutionFields, Timings, Violation};
pub use gummel::{gummel_iterate, solution_bounds, GummelOptions};
pub use params::{PhysicalParams, EPS0};
pub use poisson::{
    assemble_semilinear_poisson, potential_dirichlet, potential_from_w, solve_semilinear_poisson, NewtonOptions,
    NewtonOutcome, PoissonSystem,
};
pub use qoi::{contact_current, evaluate_qoi, mean_potential, surface_field, ContactCurrent, QoiKind};
pub use space::{bernoulli, p1_stiffness, sg_weight, Discretization, SiEdge};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FemError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("assembly error: {0}")]
    Assembly(String),
    #[error("linear solver: {0}")]
    LinearSolver(String),
    #[error("Newton did not converge after {iterations} iterations (residual {residual:e})")]
    Newton { iterations: usize, residual: f64, last: Vec<f64> },
    #[error("Gummel iteration did not converge after {iterations} iterations")]
    Gummel { iterations: usize, history: Vec<f64> },
}
