//! Incompressible multi-phase flow on a staggered lattice with phase-field
//! surface tension, volume-of-fluid walls and a projection time integrator.

pub mod capillary;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod forces;
pub mod io;
pub mod lattice;
pub mod phase;
pub mod pressure;
pub mod scenario;
pub mod solver;
pub mod transport;

pub use error::*;
