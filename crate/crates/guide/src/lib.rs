//! The book chapters, compiled as modules so `cargo test --doc` runs every
//! listing against the current crate.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/n_norms.md")]
pub mod n_norms {}
#[doc = include_str!("../../../book/src/algebras.md")]
pub mod algebras {}
#[doc = include_str!("../../../book/src/invertibility.md")]
pub mod invertibility {}
#[doc = include_str!("../../../book/src/functionals.md")]
pub mod functionals {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
