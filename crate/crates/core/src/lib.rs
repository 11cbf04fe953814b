//! Anisotropic mesh adaptation for Lagrange finite elements of arbitrary
//! order, measured in `W^{1,p}` semi-norms.

pub mod analysis;
pub mod error;
pub mod function;
pub mod geom;
pub mod interp;
pub mod meshgen;
pub mod metric;
pub mod optim;
pub mod poly;
pub mod shape;

pub use error::{Error, Result};
