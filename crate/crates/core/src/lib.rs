//! Tensor infinite Arnoldi (TIAR) for nonlinear eigenvalue problems.
//!
//! The crate is organised bottom-up:
//!
//! - [`nep`]: the problem abstraction consumed by the solvers, Cayley
//!   transform utilities and polynomial test problems.
//! - [`arnoldi`]: the reference infinite Arnoldi iteration (IAR), its
//!   tensor-compressed equivalent (TIAR) and Ritz extraction.
//! - [`waveguide`]: finite-element discretization of the periodic
//!   waveguide with Dirichlet-to-Neumann boundary maps.
//! - [`wtiar`]: the Cayley-transformed waveguide problem together with the
//!   structured computation of the next Krylov direction.

pub mod arnoldi;
pub mod error;
pub mod linalg;
pub mod nep;
pub mod waveguide;
pub mod wtiar;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
