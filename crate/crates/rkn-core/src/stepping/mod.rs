//! Time steppers and strong Dirichlet enforcement for stage systems.

pub mod bc;
pub mod central;
pub mod rk;
pub mod rkn;

pub use bc::StageConstraints;
pub use central::{central_start, CentralStepper};
pub use rk::{pack_state, reduce_first_order, split_state, FirstOrderSystem, RkStepper};
pub use rkn::RknStepper;

use crate::linalg::LinalgError;
use crate::models::ModelError;
use crate::tableau::TableauError;
use thiserror::Error;

/// Current time level: time, solution coefficients, and first
/// derivative coefficients.
#[derive(Clone, Debug)]
pub struct StepState {
    pub t: f64,
    pub y: Vec<f64>,
    pub y_t: Vec<f64>,
}

impl StepState {
    pub fn new(t: f64, y: Vec<f64>, y_t: Vec<f64>) -> Self {
        debug_assert!(y.iter().chain(&y_t).all(|v| v.is_finite()));
        Self { t, y, y_t }
    }
}

/// Strategy for strongly imposing Dirichlet data on the stages.
///
/// * `Ode`: constrain stage second derivatives to `h_tt`.
/// * `Dae`: constrain the stage solution approximations to `h`
///   (requires nonsingular `Abar`).
/// * `Ddae`: constrain the stage derivative approximations to `h_t`
///   (requires nonsingular `A`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BcStrategy {
    Ode,
    Dae,
    Ddae,
}

impl std::fmt::Display for BcStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BcStrategy::Ode => write!(f, "ode"),
            BcStrategy::Dae => write!(f, "dae"),
            BcStrategy::Ddae => write!(f, "ddae"),
        }
    }
}

/// Per-step solver effort summary.
#[derive(Clone, Copy, Debug, Default)]
pub struct StepReport {
    /// Inner linear iterations (Krylov) or mass solves (explicit path).
    pub iterations: usize,
    /// Final linear residual of the stage solve.
    pub residual: f64,
    /// Wall time of the step in seconds.
    pub seconds: f64,
}

#[derive(Debug, Error)]
pub enum SteppingError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Tableau(#[from] TableauError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{strategy} boundary enforcement needs an invertible stage coupling matrix; the tableau's is singular")]
    SingularConstraint { strategy: BcStrategy },
    #[error("central differencing does not support damped systems (C != 0)")]
    UnsupportedDamping,
    #[error("state length {found} does not match system dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
}
