//! Constraint rows that impose Dirichlet data on the stage system.
//!
//! For each constrained degree of freedom `l`, the block row `(i, l)` of
//! the stage system is replaced (no symmetric elimination, which would
//! destroy the Kronecker structure the preconditioners assume) by one of
//!
//! ```text
//! ode:  kappa_i[l] = h_tt(t + c_i dt)[l]
//! dae:  y[l] + c_i dt y_t[l] + dt^2 sum_j Abar_ij kappa_j[l] = h(t + c_i dt)[l]
//! ddae: y_t[l] + dt sum_j A_ij kappa_j[l] = h_t(t + c_i dt)[l]
//! ```
//!
//! The dae and ddae rows couple all stages of a constrained DOF and are
//! solvable only when `Abar` (resp. `A`) is invertible.

use crate::linalg::dense::DMat;
use crate::linalg::RowConstraints;
use crate::models::BoundarySpec;
use crate::tableau::{NystromTableau, TriangularSource};
use crate::stepping::{BcStrategy, SteppingError, StepState};

/// Numerical singularity test by pivoted elimination.
fn is_singular(a: &DMat) -> bool {
    let n = a.n_rows();
    let scale = a.max_abs();
    if scale == 0.0 {
        return true;
    }
    let mut w = a.clone();
    for k in 0..n {
        let mut p = k;
        for i in (k + 1)..n {
            if w.get(i, k).abs() > w.get(p, k).abs() {
                p = i;
            }
        }
        if w.get(p, k).abs() <= 1e-12 * scale {
            return true;
        }
        if p != k {
            for j in 0..n {
                let t = w.get(k, j);
                w.set(k, j, w.get(p, j));
                w.set(p, j, t);
            }
        }
        for i in (k + 1)..n {
            let l = w.get(i, k) / w.get(k, k);
            for j in (k + 1)..n {
                let v = w.get(i, j) - l * w.get(k, j);
                w.set(i, j, v);
            }
        }
    }
    false
}

/// Assembled constraint data for one (strategy, tableau, dt) triple.
#[derive(Clone)]
pub struct StageConstraints {
    pub strategy: BcStrategy,
    /// Stage-coupling coefficients of the replaced rows (s x s).
    coeff: DMat,
    indices: Vec<usize>,
}

impl StageConstraints {
    /// Build the constraint rows. Fails with a singular-constraint error
    /// when the strategy needs an invertible coupling matrix and the
    /// tableau cannot provide one (explicit or rank-deficient tableaux).
    pub fn build(
        strategy: BcStrategy,
        tab: &NystromTableau,
        dt: f64,
        indices: Vec<usize>,
    ) -> Result<Self, SteppingError> {
        let s = tab.s;
        let coeff = match strategy {
            BcStrategy::Ode => DMat::identity(s),
            BcStrategy::Dae => {
                if is_singular(&tab.abar) {
                    return Err(SteppingError::SingularConstraint { strategy });
                }
                let mut c = DMat::zeros(s, s);
                for i in 0..s {
                    for j in 0..s {
                        c.set(i, j, dt * dt * tab.abar.get(i, j));
                    }
                }
                c
            }
            BcStrategy::Ddae => {
                if is_singular(&tab.a) {
                    return Err(SteppingError::SingularConstraint { strategy });
                }
                let mut c = DMat::zeros(s, s);
                for i in 0..s {
                    for j in 0..s {
                        c.set(i, j, dt * tab.a.get(i, j));
                    }
                }
                c
            }
        };
        Ok(Self { strategy, coeff, indices })
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Row data for the linear algebra layer; `None` when nothing is
    /// constrained.
    pub fn row_constraints(&self) -> Option<RowConstraints> {
        if self.is_empty() {
            None
        } else {
            Some(RowConstraints { indices: self.indices.clone(), coeff: self.coeff.clone() })
        }
    }

    /// Lower-triangular coefficients for the preconditioner's
    /// constrained rows, mirroring the structural approximation used
    /// for the stage couplings.
    pub fn precond_coeff(&self, source: TriangularSource) -> Option<DMat> {
        if self.is_empty() {
            return None;
        }
        Some(match source {
            TriangularSource::Diagonal => self.coeff.diagonal_part(),
            _ => self.coeff.lower_part(),
        })
    }

    /// Overwrite the constrained rows of a stacked right-hand side with
    /// the per-stage constraint values.
    pub fn apply_to_rhs(
        &self,
        rhs: &mut [f64],
        m: usize,
        bc: &BoundarySpec,
        state: &StepState,
        dt: f64,
        c_nodes: &[f64],
    ) {
        if self.is_empty() {
            return;
        }
        let s = c_nodes.len();
        for (i, &ci) in c_nodes.iter().enumerate().take(s) {
            let ti = state.t + ci * dt;
            let vals = match self.strategy {
                BcStrategy::Ode => (bc.acceleration)(ti),
                BcStrategy::Dae => {
                    let h = (bc.value)(ti);
                    bc.indices
                        .iter()
                        .enumerate()
                        .map(|(k, &l)| h[k] - state.y[l] - ci * dt * state.y_t[l])
                        .collect()
                }
                BcStrategy::Ddae => {
                    let hd = (bc.velocity)(ti);
                    bc.indices
                        .iter()
                        .enumerate()
                        .map(|(k, &l)| hd[k] - state.y_t[l])
                        .collect()
                }
            };
            for (k, &l) in self.indices.iter().enumerate() {
                rhs[i * m + l] = vals[k];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tableau::{classical_nystrom_tableau, collocation_tableau, extend_tableau, CollocationFamily};

    fn gl1() -> NystromTableau {
        extend_tableau(&collocation_tableau(CollocationFamily::GaussLegendre, 1).unwrap())
    }

    #[test]
    fn dae_rejects_singular_abar() {
        let tab = classical_nystrom_tableau();
        let err = StageConstraints::build(BcStrategy::Dae, &tab, 0.1, vec![0]);
        assert!(matches!(err, Err(SteppingError::SingularConstraint { strategy: BcStrategy::Dae })));
        let err = StageConstraints::build(BcStrategy::Ddae, &tab, 0.1, vec![0]);
        assert!(matches!(err, Err(SteppingError::SingularConstraint { strategy: BcStrategy::Ddae })));
        // ode never needs invertibility
        assert!(StageConstraints::build(BcStrategy::Ode, &tab, 0.1, vec![0]).is_ok());
    }

    #[test]
    fn gl1_dae_unit_constraint() {
        // GL(1), h(t) = t^2, t^n = 0, dt = 1, y = y_t = 0:
        // 0.25 kappa = h(0.5) = 0.25 => kappa = 1
        let tab = gl1();
        let sc = StageConstraints::build(BcStrategy::Dae, &tab, 1.0, vec![0]).unwrap();
        let rc = sc.row_constraints().unwrap();
        assert!((rc.coeff.get(0, 0) - 0.25).abs() < 1e-15);
        let bc = BoundarySpec {
            indices: vec![0],
            value: std::sync::Arc::new(|t: f64| vec![t * t]),
            velocity: std::sync::Arc::new(|t: f64| vec![2.0 * t]),
            acceleration: std::sync::Arc::new(|_| vec![2.0]),
        };
        let state = StepState::new(0.0, vec![0.0], vec![0.0]);
        let mut rhs = vec![7.0];
        sc.apply_to_rhs(&mut rhs, 1, &bc, &state, 1.0, &tab.c);
        assert!((rhs[0] - 0.25).abs() < 1e-15);
        // constraint solve: 0.25 kappa = 0.25
        assert!((rhs[0] / rc.coeff.get(0, 0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gl1_ddae_recovers_second_derivative() {
        // same setup with h_t(t) = 2t: 0.5 kappa = h_t(0.5) = 1 => kappa = 2 = h_tt
        let tab = gl1();
        let sc = StageConstraints::build(BcStrategy::Ddae, &tab, 1.0, vec![0]).unwrap();
        let rc = sc.row_constraints().unwrap();
        assert!((rc.coeff.get(0, 0) - 0.5).abs() < 1e-15);
        let bc = BoundarySpec {
            indices: vec![0],
            value: std::sync::Arc::new(|t: f64| vec![t * t]),
            velocity: std::sync::Arc::new(|t: f64| vec![2.0 * t]),
            acceleration: std::sync::Arc::new(|_| vec![2.0]),
        };
        let state = StepState::new(0.0, vec![0.0], vec![0.0]);
        let mut rhs = vec![0.0];
        sc.apply_to_rhs(&mut rhs, 1, &bc, &state, 1.0, &tab.c);
        assert!((rhs[0] / rc.coeff.get(0, 0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn ode_homogeneous_forces_zero_rows() {
        let tab = gl1();
        let sc = StageConstraints::build(BcStrategy::Ode, &tab, 0.5, vec![0]).unwrap();
        let bc = BoundarySpec::homogeneous(vec![0]);
        let state = StepState::new(0.0, vec![0.0], vec![0.0]);
        let mut rhs = vec![3.0];
        sc.apply_to_rhs(&mut rhs, 1, &bc, &state, 0.5, &tab.c);
        assert_eq!(rhs[0], 0.0);
    }
}
