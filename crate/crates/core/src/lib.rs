//! Potential-theory toolkit for the Laplacian on disks and on disks with holes.

pub mod boundary_data;
pub mod disk;
pub mod field;
pub mod geometry;
pub mod greens;
pub mod harness;
pub mod holed;
pub mod kernels;
pub mod metrics;

pub use boundary_data::{NeumannData, PeriodicFunction};
pub use field::HarmonicField;
pub use geometry::{Mat2, Point, Vec2};
