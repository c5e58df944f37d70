//! Numerics for the non-self-adjoint two-mode Hamiltonian
//!
//! ```text
//! H = β(a*a − b*b) + (a*a + bb*) + γ(a*b* − ab),   γ ≥ 0
//! ```
//!
//! on truncated Fock spaces: its pseudo-boson diagonalization, biorthogonal
//! eigenbases of `H` and `H*`, the equation-of-motion matrix, the su(1,1)
//! structure of the Casimir sectors, and a finite-dimensional similarity
//! verifier. Everything is built on exact finite sections plus a small
//! self-contained eigensolver.

pub mod emm;
pub mod error;
pub mod finitesim;
pub mod fock;
pub mod linalg;
pub mod pseudoboson;
pub mod sectors;

pub use error::{Error, Result};
pub use fock::{FockVector, Geometry, InteriorMask, Operator, TruncationSpec};
pub use pseudoboson::ModelParams;
pub use sectors::SectorSpec;

pub use num_complex::Complex64 as C64;
