//! Time integration of linear second-order semidiscrete systems
//!
//! This crate implements Runge-Kutta (RK) and Runge-Kutta-Nystrom (RKN)
//! time stepping for systems of the form
//!
//! ```text
//! M y'' + C y' + K y = f(t)
//! ```
//!
//! as they arise from finite element semidiscretization of wave-type
//! equations. It provides:
//!
//! * [`tableau`]: Butcher and extended Nystrom tableaux, collocation
//!   construction (Gauss-Legendre, RadauIIA), order verification, and
//!   triangular approximations for preconditioning.
//! * [`linalg`]: CSR sparse matrices, banded direct factorization,
//!   restarted GMRES, the Kronecker-structured stage operator, stage
//!   segregated block-triangular preconditioners, generalized power
//!   iteration, and mass lumping.
//! * [`models`]: assembly of 1D/2D wave, telegraph, and Hermite beam
//!   test systems together with their discrete energy.
//! * [`stepping`]: implicit/explicit RKN steps, RK steps on the
//!   first-order reduction, central differencing, and three strong
//!   Dirichlet enforcement strategies for the stage systems.

pub mod linalg;
pub mod models;
pub mod stepping;
pub mod tableau;

pub use linalg::{Preconditioner, SolverConfig, SolverMethod, SparseMatrix};
pub use models::{BoundarySpec, EnergyReport, SecondOrderSystem};
pub use stepping::{BcStrategy, StepReport, StepState};
pub use tableau::{ButcherTableau, NystromTableau, TriangularApproximation};
