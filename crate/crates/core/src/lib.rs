//! Exact-diagonalization toolkit for finite lattice quantum spin systems.

// `!(x > 0.0)` rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate openblas_src;

pub mod basis;
pub mod charge;
pub mod error;
pub mod filters_qa;
pub mod hall;
pub mod lanczos;
pub mod lattice;
pub mod lieb_robinson;
pub mod linalg;
pub mod lsm;
pub mod models;
pub mod operator;
pub mod sparse;
pub mod spectral;
pub mod spin;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
