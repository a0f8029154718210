//! Central (leapfrog) time differencing for undamped systems:
//!
//! ```text
//! M y^{n+1} = M (2 y^n - y^{n-1}) - dt^2 (K y^n - f(t^n)),
//! ```
//!
//! with Dirichlet rows of the mass solve replaced by the prescribed
//! values h(t^{n+1}) (row replacement; a plain post-solve overwrite
//! would let the boundary rows of the right-hand side leak into the
//! interior through M^{-1}). Damped systems are rejected; the scheme is
//! stated for C = 0 only.

use super::SteppingError;
use crate::linalg::band::{factor_combination_with_identity_rows, BandLu};
use crate::linalg::lump_mass;
use crate::models::SecondOrderSystem;

enum MassSolver {
    /// Diagonal (lumped) mass: the update needs no linear solve.
    Lumped(Vec<f64>),
    /// Consistent mass with constrained rows replaced, factored once.
    Factored(BandLu),
}

pub struct CentralStepper<'a> {
    sys: &'a SecondOrderSystem,
    solver: MassSolver,
}

impl<'a> CentralStepper<'a> {
    pub fn new(sys: &'a SecondOrderSystem, use_lumped: bool) -> Result<Self, SteppingError> {
        if sys.damping.nnz() > 0 {
            return Err(SteppingError::UnsupportedDamping);
        }
        let solver = if use_lumped {
            MassSolver::Lumped(lump_mass(&sys.mass)?.row_sums())
        } else {
            MassSolver::Factored(factor_combination_with_identity_rows(
                &[(1.0, &sys.mass)],
                &sys.dirichlet.indices,
            )?)
        };
        Ok(Self { sys, solver })
    }

    /// Advance from (y^{n-1}, y^n) at time t^n to y^{n+1}.
    pub fn step(
        &self,
        t: f64,
        y_prev: &[f64],
        y_curr: &[f64],
        dt: f64,
    ) -> Result<Vec<f64>, SteppingError> {
        let m = self.sys.m;
        if y_prev.len() != m || y_curr.len() != m {
            return Err(SteppingError::DimensionMismatch {
                expected: m,
                found: y_prev.len().max(y_curr.len()),
            });
        }
        let mut ky = vec![0.0; m];
        self.sys.stiffness.spmv_into(y_curr, &mut ky);
        let f = (self.sys.forcing)(t);
        let bvals = if self.sys.dirichlet.indices.is_empty() {
            Vec::new()
        } else {
            (self.sys.dirichlet.value)(t + dt)
        };
        let y_next = match &self.solver {
            MassSolver::Lumped(d) => {
                let mut out: Vec<f64> = (0..m)
                    .map(|l| 2.0 * y_curr[l] - y_prev[l] - dt * dt * (ky[l] - f[l]) / d[l])
                    .collect();
                for (k, &l) in self.sys.dirichlet.indices.iter().enumerate() {
                    out[l] = bvals[k];
                }
                out
            }
            MassSolver::Factored(lu) => {
                let mut combo = vec![0.0; m];
                for l in 0..m {
                    combo[l] = 2.0 * y_curr[l] - y_prev[l];
                }
                let mut rhs = vec![0.0; m];
                self.sys.mass.spmv_into(&combo, &mut rhs);
                for l in 0..m {
                    rhs[l] -= dt * dt * (ky[l] - f[l]);
                }
                for (k, &l) in self.sys.dirichlet.indices.iter().enumerate() {
                    rhs[l] = bvals[k];
                }
                lu.solve_in_place(&mut rhs);
                rhs
            }
        };
        Ok(y_next)
    }
}

/// Taylor-consistent second-order starting value:
///
/// ```text
/// y^{-1} = y^0 - dt v^0 + (dt^2 / 2) M^{-1} (f(0) - K y^0),
/// ```
///
/// with constrained rows of the acceleration solve prescribed to
/// h_tt(0).
pub fn central_start(
    sys: &SecondOrderSystem,
    y0: &[f64],
    v0: &[f64],
    dt: f64,
) -> Result<Vec<f64>, SteppingError> {
    let m = sys.m;
    if y0.len() != m || v0.len() != m {
        return Err(SteppingError::DimensionMismatch { expected: m, found: y0.len().max(v0.len()) });
    }
    let mut ky = vec![0.0; m];
    sys.stiffness.spmv_into(y0, &mut ky);
    let f = (sys.forcing)(0.0);
    let mut acc: Vec<f64> = (0..m).map(|l| f[l] - ky[l]).collect();
    if !sys.dirichlet.indices.is_empty() {
        let htt = (sys.dirichlet.acceleration)(0.0);
        for (k, &l) in sys.dirichlet.indices.iter().enumerate() {
            acc[l] = htt[k];
        }
    }
    let lu = factor_combination_with_identity_rows(&[(1.0, &sys.mass)], &sys.dirichlet.indices)?;
    lu.solve_in_place(&mut acc);
    Ok((0..m)
        .map(|l| y0[l] - dt * v0[l] + 0.5 * dt * dt * acc[l])
        .collect())
}
