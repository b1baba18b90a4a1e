//! Quantum theta functions on noncommutative tori.

pub mod cli;
pub mod error;
pub mod exact;
pub mod finite_ext;
pub mod gaussian_models;
pub mod heisenberg;
pub mod kaehler;
pub mod lattices;
pub mod linalg;
pub mod quadrature;
pub mod tail;
pub mod theta_engine;
pub mod torus_algebra;

pub use error::{Error, Result};
pub use num_complex::Complex64;
