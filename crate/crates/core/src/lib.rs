//! Monte-Carlo and multilevel Monte-Carlo finite-element estimation for the
//! stochastic drift-diffusion-Poisson system.
//!
//! The crate is organised bottom-up:
//!
//! - [`mesh`] builds conforming, tagged triangulations of a layered device.
//! - [`fem`] solves one deterministic realization by Gummel iteration in
//!   Slotboom variables (Newton for the semilinear Poisson equation,
//!   Scharfetter-Gummel fitted continuity equations).
//! - [`stochastic`] draws reproducible random-dopant events and evaluates
//!   them on coupled mesh levels.
//! - [`estimators`] implements the MC and MLMC estimators and their RMSE bounds.
//! - [`calibration`] fits the error and cost models from solver runs.
//! - [`optimizer`] computes cost-optimal MC and MLMC hierarchies with a
//!   primal-dual interior-point method.
//! - [`cli`] wires everything into the `mlmc-ddp` command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod calibration;
pub mod cli;
pub mod estimators;
pub mod fem;
pub mod mesh;
pub mod optimizer;
pub mod stochastic;
