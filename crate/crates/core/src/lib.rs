//! n-normed spaces and n-Banach algebras as executable structures.

pub mod algebra;
pub mod axioms;
pub mod element;
pub mod functionals;
pub mod harness;
pub mod invertibility;
pub mod linalg;
pub mod nnorm;
pub mod report;
pub mod sampling;
pub mod scalar;
