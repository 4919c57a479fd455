//! Conforming 2D triangulations of a layered device cross-section.
//!
//! The device is a rectangle split into horizontal layers (silicon at the
//! bottom, then oxide, then the liquid). Mesh lines always follow layer
//! boundaries and contact end points, so every subdomain interface and every
//! contact is a union of mesh edges.

mod builder;
mod export;
mod geometry;
mod locate;
mod trimesh;

pub use builder::{build_device_mesh, build_layered_mesh, refine_to};
pub use export::write_mesh_text;
pub use geometry::{ContactSegment, DeviceGeometry, LayeredDomain, Side, Subdomain};
pub use trimesh::{shape_regularity, EdgeTag, TaggedEdge, TriMesh};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("refinement failed: {0}")]
    Refinement(String),
    #[error("degenerate triangle {triangle}: signed area {area:e}")]
    DegenerateTriangle { triangle: usize, area: f64 },
    #[error("invalid mesh: {0}")]
    Invalid(String),
}
