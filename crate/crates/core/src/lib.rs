//! Numerical toolkit for quasilinear Schrödinger equations on periodic grids.

pub mod cli;
pub mod error;
pub mod expr;
pub mod field;
pub mod lab;
pub mod linear;
pub mod lp;
pub mod quasi;
pub mod spaces;

pub use error::{Error, IoError, Result};
pub use field::{C64, Field, GridSpec, SpaceTimeField, SpatialField};
