//! Shape optimization constrained by obstacle-type variational inequalities,
//! discretized with P1 finite elements on fitted triangle meshes.

pub mod adjoint;
pub mod cli;
pub mod error;
pub mod fem;
pub mod lab;
pub mod mesh;
pub mod optim;
pub mod par;
pub mod shape;
pub mod vi;

pub use error::{Error, Result};
