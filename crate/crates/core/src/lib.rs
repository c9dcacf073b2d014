//! Reduced dynamics of particles with internal symmetry: chart systems,
//! gauge reduction, the reduced integrator, a full-space reference
//! integrator and a lattice gauge model.

pub mod chart_system;
pub mod cli;
pub mod error;
pub mod lattice;
pub mod lie_algebra;
pub mod oracle;
pub mod reduction;
pub mod tensor;
pub mod wong;

pub use error::{Result, WongError};
