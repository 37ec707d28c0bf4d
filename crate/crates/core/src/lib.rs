//! Hierarchy of multipartite entanglement criteria for continuous-variable
//! states whose Wigner function is a polynomial times a Gaussian.

pub mod catalog;
pub mod error;
pub mod hierarchy;
pub mod linalg;
pub mod measurement;
pub mod nelder_mead;
pub mod optimizer;
pub mod poly;
pub mod ppt;
pub mod probes;
pub mod quadrature;
pub mod scan;
pub mod symplectic;

pub use error::{Error, Result};
