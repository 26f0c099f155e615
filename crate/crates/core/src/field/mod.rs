//! Grids, complex fields, spectral transforms and DFF1 field files.

mod grid;
pub mod io;
pub mod spectral;
mod values;

pub use grid::GridSpec;
pub use spectral::{derivative, inner_product, spectral_transform, Direction};
pub use values::{trapezoid_weights, Field, SpaceTimeField, SpatialField, C64};
