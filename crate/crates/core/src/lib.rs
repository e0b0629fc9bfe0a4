//! Quasicontinuum benchmarks for plane-strain FCC lattice statics.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod lattice;
pub mod models;
pub mod potentials;
pub mod solver;

pub use error::{QcError, Result};
