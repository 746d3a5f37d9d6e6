//! Pseudo-spectral solver for one-dimensional free-surface water waves over
//! a flat bed, with an audit engine for the conserved quantities of the
//! irrotational and constant-vorticity equations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod bulk;
pub mod conservation;
pub mod dno;
pub mod error;
pub mod grid;
pub mod harness;
pub mod oracles;
pub mod scenario;
pub mod test_functions;

pub use error::{Error, Result};
pub use grid::{PeriodicGrid, RealField};
