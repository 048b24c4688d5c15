//! Numerical cocycles on groups of Hamiltonian diffeomorphisms of the plane
//! and the cylinder.

pub mod error;
pub mod exprlang;
pub mod geometry;
pub mod dynamics;
pub mod cocycle;
pub mod cover;
pub mod invariants;
pub mod distortion;
pub mod verify;

pub use error::{Error, Result};
pub use exprlang::Expr;
pub use geometry::{ManifoldKind, ManifoldModel, Point, Primitive, PrimitiveKind, Vector, Window};
