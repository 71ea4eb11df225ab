//! Decompositions of homomorphisms out of dimension drop algebras.

pub mod decomp_one;
pub mod decomp_two;
pub mod error;
pub mod linalg;
pub mod matrix_rep;
pub mod scenario;
pub mod simplicial;
pub mod spectra;

pub use error::{exit_code, Error, Result};
