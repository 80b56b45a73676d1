//! Estimation of nonlinear density-matrix functionals `Tr(ρ^k O)`.
//!
//! The crate is organised bottom-up:
//!
//! * [`numkernel`] dense complex linear algebra, states, observables and the
//!   exact `Tr(ρ^k O)` oracle.
//! * [`chebyshev`] Chebyshev expansion and truncation of `x^k`.
//! * [`blockenc`] purifications, block encodings, Halmos dilations and products.
//! * [`qsvt`] eigenvalue-level simulation of polynomial transforms of block encodings.
//! * [`estimator`] the Hadamard test, amplitude estimation and the end-to-end estimator.
//! * [`bounds`] the sample-access swap-test baseline and the lower-bound constructions.
//! * [`instances`] seeded random states, unitaries and observables.

pub mod blockenc;
pub mod bounds;
pub mod chebyshev;
pub mod error;
pub mod estimator;
pub mod instances;
pub mod numkernel;
pub mod qsvt;
pub mod rng;

pub use error::{Error, Result};
pub use numkernel::{ComplexMatrix, DensityMatrix, EighResult, Observable, C64};
