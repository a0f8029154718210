//! Sparse and dense linear algebra for stage-coupled time stepping.

pub mod band;
pub mod dense;
pub mod eig;
pub mod gmres;
pub mod sparse;
pub mod stage;

pub use band::{BandLu, BandMatrix};
pub use eig::{power_iteration_genev, seeded_unit_vector};
pub use gmres::{gmres_solve, GmresResult};
pub use sparse::{lump_mass, SparseMatrix};
pub use stage::{BlockTriangularSolver, RowConstraints, StageDirectSolver, StageOperator};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("index ({row}, {col}) out of range for {n_rows}x{n_cols} matrix")]
    IndexOutOfRange { row: usize, col: usize, n_rows: usize, n_cols: usize },
    #[error("matrix is singular (zero pivot at {pivot})")]
    SingularMatrix { pivot: usize },
    #[error("LDU factorization hit a zero leading principal minor (pivot {pivot})")]
    SingularFactorization { pivot: usize },
    #[error("diagonal block of stage {stage} is singular")]
    SingularDiagonalBlock { stage: usize },
    #[error("GMRES did not converge in {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64, best: Vec<f64> },
    #[error("power iteration did not converge (last estimate {last})")]
    EigNonConvergence { last: f64 },
    #[error("mass lumping produced a nonpositive row sum {sum} at row {row}")]
    LumpingInvalid { row: usize, sum: f64 },
}

/// Linear solver selection for implicit stage systems.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverMethod {
    Direct,
    Gmres,
}

/// Stage-segregated preconditioners for the Krylov path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preconditioner {
    None,
    BlockDiagonal,
    BlockLower,
    ClinesLd,
}

/// Configuration shared by the iterative and direct solve paths.
#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub method: SolverMethod,
    /// Relative residual tolerance.
    pub rtol: f64,
    /// Absolute residual tolerance.
    pub atol: f64,
    pub max_iters: usize,
    /// GMRES restart length.
    pub restart: usize,
    pub preconditioner: Preconditioner,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: SolverMethod::Direct,
            rtol: 1e-7,
            atol: 1e-14,
            max_iters: 10_000,
            restart: 50,
            preconditioner: Preconditioner::None,
        }
    }
}

impl SolverConfig {
    pub fn gmres(rtol: f64, preconditioner: Preconditioner) -> Self {
        Self { method: SolverMethod::Gmres, rtol, preconditioner, ..Self::default() }
    }
}
