//! Kernel-based approximation of eigenvalues and eigenfunctions of
//! second-order differential operators (Koopman generators, Kolmogorov
//! backward operators, Schrödinger operators) from point data.
//!
//! The workflow mirrors the underlying method: pick a kernel with
//! derivative reproducing structure ([`kernels`]), describe the operator
//! through its coefficient fields ([`operators`]), assemble Gram matrices
//! at the samples ([`gram`]), and solve the resulting generalized
//! eigenvalue problem ([`eig`]). Data generation utilities live in
//! [`sampling`], and [`pipeline`] wires everything into reproducible,
//! config-driven experiments.

pub mod eig;
pub mod error;
pub mod gram;
pub mod io;
pub mod kernels;
pub mod operators;
pub mod pipeline;
pub mod sampling;

pub use error::{KgError, Result};
