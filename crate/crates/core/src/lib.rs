//! Numerical laboratory for multilevel random-matrix corner processes.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: dense self-adjoint linear algebra, Gaussian and Haar sampling.
//! - [`qseries`]: q-Pochhammer symbols and Macdonald polynomials via branching.
//! - [`quad`]: one-dimensional quadrature rules (tanh-sinh, Gauss-Legendre).
//! - [`hyperfun`]: Gelfand-Tsetlin integration, multivariate Bessel and
//!   Heckman-Opdam functions, HCIZ orbit integrals.
//! - [`ensembles`]: exact samplers for the multilevel Wishart and Jacobi models.
//! - [`densities`]: log-space densities and transition kernels.
//! - [`verify`]: goodness-of-fit statistics and the theorem/identity checks.
//! - [`cli`]: configuration and batch commands behind the `corners-lab` binary.

pub mod cli;
pub mod densities;
pub mod ensembles;
pub mod error;
pub mod hyperfun;
pub mod linalg;
pub mod qseries;
pub mod quad;
pub mod rng;
pub mod verify;

pub use densities::LogValue;
pub use error::{Error, Result};
pub use linalg::{DenseMatrix, Field, SelfAdjointMatrix, Spectrum};
