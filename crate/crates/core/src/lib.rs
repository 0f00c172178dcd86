//! Finite-matrix realization of the Furry-picture block-diagonalization of
//! the Dirac–Coulomb operator and of its perturbative expansion in the
//! coupling.

pub mod decoupling;
pub mod dirac;
pub mod error;
pub mod furry;
pub mod linalg;
pub mod pair;
pub mod series;
pub mod special;

pub use error::{Error, Result};
