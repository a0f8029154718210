//! Runge-Kutta-Nystrom stepping on M y'' + C y' + K y = f(t).
//!
//! One step solves the stage system
//!
//! ```text
//! (I (x) M + dt A (x) C + dt^2 Abar (x) K) kappa = rhs,
//! rhs_i = f(t + c_i dt) - C y_t - K (y + c_i dt y_t),
//! ```
//!
//! with constrained rows replaced per the boundary strategy, then
//! updates
//!
//! ```text
//! y   <- y + dt y_t + dt^2 sum_i bbar_i kappa_i
//! y_t <- y_t + dt sum_i b_i kappa_i.
//! ```
//!
//! Explicit tableaux (Abar, A strictly lower) bypass the coupled solve:
//! each stage costs one mass solve.

use super::bc::StageConstraints;
use super::{BcStrategy, StepReport, SteppingError, StepState};
use crate::linalg::band::{factor_combination_with_identity_rows, BandLu};
use crate::linalg::{
    gmres_solve, BlockTriangularSolver, Preconditioner, SolverConfig, SolverMethod,
    StageDirectSolver, StageOperator,
};
use crate::models::SecondOrderSystem;
use crate::tableau::{triangular_approx, NystromTableau, TriangularSource};
use std::time::Instant;

enum Path<'a> {
    Explicit { mass_lu: BandLu },
    Direct { solver: StageDirectSolver },
    Gmres { precond: Option<BlockTriangularSolver<'a>> },
}

struct Cache<'a> {
    dt: f64,
    constraints: StageConstraints,
    path: Path<'a>,
}

/// Stateful stepper: stage factorizations and preconditioner setups are
/// cached keyed on dt and rebuilt when it changes. Single-threaded by
/// design; distinct steppers over shared immutable systems may run in
/// parallel.
pub struct RknStepper<'a> {
    sys: &'a SecondOrderSystem,
    tab: NystromTableau,
    bc: BcStrategy,
    cfg: SolverConfig,
    cache: Option<Cache<'a>>,
}

fn precond_source(p: Preconditioner) -> Option<TriangularSource> {
    match p {
        Preconditioner::None => None,
        Preconditioner::BlockDiagonal => Some(TriangularSource::Diagonal),
        Preconditioner::BlockLower => Some(TriangularSource::LowerPart),
        Preconditioner::ClinesLd => Some(TriangularSource::ClinesLd),
    }
}

impl<'a> RknStepper<'a> {
    pub fn new(
        sys: &'a SecondOrderSystem,
        tab: NystromTableau,
        bc: BcStrategy,
        cfg: SolverConfig,
    ) -> Self {
        Self { sys, tab, bc, cfg, cache: None }
    }

    pub fn tableau(&self) -> &NystromTableau {
        &self.tab
    }

    /// Optional warm-up: build factorizations and preconditioners for
    /// the given dt ahead of the first step (useful when timing the
    /// stepping loop without setup costs).
    pub fn prepare(&mut self, dt: f64) -> Result<(), SteppingError> {
        self.ensure_cache(dt)
    }

    fn ensure_cache(&mut self, dt: f64) -> Result<(), SteppingError> {
        if let Some(c) = &self.cache {
            if c.dt == dt {
                return Ok(());
            }
        }
        let sys = self.sys;
        let constraints = StageConstraints::build(
            self.bc,
            &self.tab,
            dt,
            sys.dirichlet.indices.clone(),
        )?;
        let path = if self.tab.is_explicit() {
            // constrained rows are replaced by unit rows so prescribed
            // stage values pass through the mass solve unpolluted
            let mass_lu = factor_combination_with_identity_rows(
                &[(1.0, &sys.mass)],
                &sys.dirichlet.indices,
            )?;
            Path::Explicit { mass_lu }
        } else {
            match self.cfg.method {
                SolverMethod::Direct => {
                    let solver = StageDirectSolver::new(
                        &sys.mass,
                        &sys.damping,
                        &sys.stiffness,
                        dt,
                        &self.tab.abar,
                        &self.tab.a,
                        constraints.row_constraints().as_ref(),
                    )?;
                    Path::Direct { solver }
                }
                SolverMethod::Gmres => {
                    let precond = match precond_source(self.cfg.preconditioner) {
                        None => None,
                        Some(source) => {
                            let abar_t = triangular_approx(&self.tab.abar, source)?;
                            let a_t = triangular_approx(&self.tab.a, source)?;
                            Some(BlockTriangularSolver::new(
                                &sys.mass,
                                &sys.damping,
                                &sys.stiffness,
                                dt,
                                abar_t.atilde,
                                a_t.atilde,
                                constraints.row_constraints(),
                                constraints.precond_coeff(source),
                            )?)
                        }
                    };
                    Path::Gmres { precond }
                }
            }
        };
        self.cache = Some(Cache { dt, constraints, path });
        Ok(())
    }

    /// Assemble the stacked stage right-hand side (before boundary rows).
    fn stage_rhs(&self, state: &StepState, dt: f64) -> Vec<f64> {
        let sys = self.sys;
        let (s, m) = (self.tab.s, sys.m);
        let mut ky = vec![0.0; m];
        sys.stiffness.spmv_into(&state.y, &mut ky);
        let mut kyt = vec![0.0; m];
        sys.stiffness.spmv_into(&state.y_t, &mut kyt);
        let mut cyt = vec![0.0; m];
        if sys.damping.nnz() > 0 {
            sys.damping.spmv_into(&state.y_t, &mut cyt);
        }
        let mut rhs = vec![0.0; s * m];
        for i in 0..s {
            let ci = self.tab.c[i];
            let fi = (sys.forcing)(state.t + ci * dt);
            let block = &mut rhs[i * m..(i + 1) * m];
            for l in 0..m {
                block[l] = fi[l] - cyt[l] - ky[l] - ci * dt * kyt[l];
            }
        }
        rhs
    }

    /// Solve for the stacked stage vector; returns (kappa, iterations,
    /// residual).
    fn solve_stages(
        &mut self,
        state: &StepState,
        dt: f64,
    ) -> Result<(Vec<f64>, usize, f64), SteppingError> {
        self.ensure_cache(dt)?;
        let sys = self.sys;
        let (s, m) = (self.tab.s, sys.m);
        let cache = self.cache.as_ref().expect("cache just ensured");

        if let Path::Explicit { mass_lu } = &cache.path {
            // forward substitution through the strictly lower tableau
            let mut kappa = vec![0.0; s * m];
            let mut iterations = 0usize;
            let mut cs = vec![0.0; m];
            let mut kx = vec![0.0; m];
            let use_damping = sys.damping.nnz() > 0;
            for i in 0..s {
                let ci = self.tab.c[i];
                let ti = state.t + ci * dt;
                // stage approximations from previously computed stages
                let mut u = state.y.clone();
                let mut v = state.y_t.clone();
                for l in 0..m {
                    u[l] += ci * dt * state.y_t[l];
                }
                for j in 0..i {
                    let ab = dt * dt * self.tab.abar.get(i, j);
                    let aj = dt * self.tab.a.get(i, j);
                    if ab != 0.0 || aj != 0.0 {
                        let kj = &kappa[j * m..(j + 1) * m];
                        for l in 0..m {
                            u[l] += ab * kj[l];
                            v[l] += aj * kj[l];
                        }
                    }
                }
                let fi = (sys.forcing)(ti);
                sys.stiffness.spmv_into(&u, &mut kx);
                let mut acc: Vec<f64> = (0..m).map(|l| fi[l] - kx[l]).collect();
                if use_damping {
                    sys.damping.spmv_into(&v, &mut cs);
                    for l in 0..m {
                        acc[l] -= cs[l];
                    }
                }
                // constrained stage values are assigned before each
                // stage evaluation; the factorization carries matching
                // unit rows
                if !cache.constraints.is_empty() {
                    let vals = (sys.dirichlet.acceleration)(ti);
                    for (k, &l) in sys.dirichlet.indices.iter().enumerate() {
                        acc[l] = vals[k];
                    }
                }
                mass_lu.solve_in_place(&mut acc);
                iterations += 1;
                kappa[i * m..(i + 1) * m].copy_from_slice(&acc);
            }
            return Ok((kappa, iterations, 0.0));
        }

        let mut rhs = self.stage_rhs(state, dt);
        cache.constraints.apply_to_rhs(&mut rhs, m, &sys.dirichlet, state, dt, &self.tab.c);

        let op = StageOperator::new(
            &sys.mass,
            &sys.damping,
            &sys.stiffness,
            dt,
            self.tab.abar.clone(),
            self.tab.a.clone(),
        );
        let row_constraints = cache.constraints.row_constraints();
        let apply = |x: &[f64], y: &mut [f64]| {
            op.apply(x, y);
            if let Some(rc) = &row_constraints {
                rc.apply_rows(x, y, m);
            }
        };

        match &cache.path {
            Path::Direct { solver } => {
                let kappa = solver.solve(&rhs);
                let mut bx = vec![0.0; s * m];
                apply(&kappa, &mut bx);
                let residual = rhs
                    .iter()
                    .zip(&bx)
                    .map(|(r, b)| (r - b) * (r - b))
                    .sum::<f64>()
                    .sqrt();
                Ok((kappa, 0, residual))
            }
            Path::Gmres { precond } => {
                let pre = precond.as_ref().map(|p| {
                    move |r: &[f64], z: &mut [f64]| p.solve(r, z)
                });
                let result = match &pre {
                    Some(p) => gmres_solve(&apply, Some(p), &rhs, &self.cfg),
                    None => gmres_solve(&apply, None, &rhs, &self.cfg),
                }
                .map_err(SteppingError::Linalg)?;
                Ok((result.x, result.iterations, result.residual))
            }
            Path::Explicit { .. } => unreachable!("handled above"),
        }
    }

    /// Advance one step of size dt.
    pub fn step(
        &mut self,
        state: &StepState,
        dt: f64,
    ) -> Result<(StepState, StepReport), SteppingError> {
        if state.y.len() != self.sys.m || state.y_t.len() != self.sys.m {
            return Err(SteppingError::DimensionMismatch {
                expected: self.sys.m,
                found: state.y.len().max(state.y_t.len()),
            });
        }
        let start = Instant::now();
        let (kappa, iterations, residual) = self.solve_stages(state, dt)?;
        let (s, m) = (self.tab.s, self.sys.m);
        let mut y = state.y.clone();
        let mut y_t = state.y_t.clone();
        for l in 0..m {
            y[l] += dt * state.y_t[l];
        }
        for i in 0..s {
            let ki = &kappa[i * m..(i + 1) * m];
            let wy = dt * dt * self.tab.bbar[i];
            let wv = dt * self.tab.b[i];
            for l in 0..m {
                y[l] += wy * ki[l];
                y_t[l] += wv * ki[l];
            }
        }
        let report = StepReport { iterations, residual, seconds: start.elapsed().as_secs_f64() };
        Ok((StepState::new(state.t + dt, y, y_t), report))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{self, BoundarySpec, MeshInfo, ModelKind, SecondOrderSystem};
    use crate::linalg::SparseMatrix;
    use crate::tableau::{
        classical_nystrom_tableau, collocation_tableau, extend_tableau, CollocationFamily,
    };
    use std::sync::Arc;

    fn gl(s: usize) -> NystromTableau {
        extend_tableau(&collocation_tableau(CollocationFamily::GaussLegendre, s).unwrap())
    }

    #[test]
    fn gl1_scalar_oscillator_closed_form() {
        // y'' = -y, GL(1): kappa = -1/1.0025, y1 ~ 0.99501247, v1 ~ -0.09975062
        let sys = models::oscillator();
        let mut stepper = RknStepper::new(&sys, gl(1), BcStrategy::Ode, SolverConfig::default());
        let state = StepState::new(0.0, vec![1.0], vec![0.0]);
        let (next, report) = stepper.step(&state, 0.1).unwrap();
        assert!((next.y[0] - (1.0 - 0.005 / 1.0025)).abs() < 1e-12);
        assert!((next.y_t[0] + 0.1 / 1.0025).abs() < 1e-12);
        assert!((next.t - 0.1).abs() < 1e-15);
        assert_eq!(report.iterations, 0); // direct path
        assert!(report.residual < 1e-12);
    }

    #[test]
    fn zero_data_stays_zero() {
        let sys = models::assemble_wave_1d(8, 1.0).unwrap();
        let mut stepper = RknStepper::new(&sys, gl(2), BcStrategy::Ddae, SolverConfig::default());
        let state = StepState::new(0.0, vec![0.0; sys.m], vec![0.0; sys.m]);
        let (next, _) = stepper.step(&state, 0.05).unwrap();
        assert!(next.y.iter().all(|v| v.abs() < 1e-14));
        assert!(next.y_t.iter().all(|v| v.abs() < 1e-14));
        assert!((next.t - 0.05).abs() < 1e-15);
    }

    /// A 1-DOF system whose only DOF is Dirichlet-constrained, driving
    /// the stage solve entirely through the constraint rows.
    fn constrained_scalar(h: BoundarySpec) -> SecondOrderSystem {
        let one = SparseMatrix::identity(1);
        let mesh = MeshInfo { kind: ModelKind::Oscillator, dim: 0, n: 1, h: 1.0 };
        let mut sys = SecondOrderSystem::unforced(
            one.clone(),
            SparseMatrix::zeros(1, 1),
            one,
            h,
            mesh,
            "constrained",
        );
        sys.label = "constrained".into();
        sys
    }

    fn quadratic_boundary() -> BoundarySpec {
        BoundarySpec {
            indices: vec![0],
            value: Arc::new(|t: f64| vec![t * t]),
            velocity: Arc::new(|t: f64| vec![2.0 * t]),
            acceleration: Arc::new(|_| vec![2.0]),
        }
    }

    #[test]
    fn dae_constraint_gl1_step() {
        // kappa = 1 (see bc tests); y1 = dt^2 * bbar * kappa = 0.5
        let sys = constrained_scalar(quadratic_boundary());
        let mut stepper = RknStepper::new(&sys, gl(1), BcStrategy::Dae, SolverConfig::default());
        let state = StepState::new(0.0, vec![0.0], vec![0.0]);
        let (next, _) = stepper.step(&state, 1.0).unwrap();
        assert!((next.y[0] - 0.5).abs() < 1e-13);
        assert!((next.y_t[0] - 1.0).abs() < 1e-13);
    }

    #[test]
    fn ddae_constraint_gl1_step() {
        // kappa = 2 = h_tt exactly for quadratic data
        let sys = constrained_scalar(quadratic_boundary());
        let mut stepper = RknStepper::new(&sys, gl(1), BcStrategy::Ddae, SolverConfig::default());
        let state = StepState::new(0.0, vec![0.0], vec![0.0]);
        let (next, _) = stepper.step(&state, 1.0).unwrap();
        // y1 = dt^2 * bbar * kappa = 0.5 * 2 = 1 = h(1), v1 = b * kappa = 2 = h_t(1)
        assert!((next.y[0] - 1.0).abs() < 1e-13);
        assert!((next.y_t[0] - 2.0).abs() < 1e-13);
    }

    #[test]
    fn dae_with_nystrom_tableau_errors() {
        let sys = constrained_scalar(quadratic_boundary());
        let mut stepper = RknStepper::new(
            &sys,
            classical_nystrom_tableau(),
            BcStrategy::Dae,
            SolverConfig::default(),
        );
        let state = StepState::new(0.0, vec![0.0], vec![0.0]);
        let err = stepper.step(&state, 0.1);
        assert!(matches!(
            err,
            Err(SteppingError::SingularConstraint { strategy: BcStrategy::Dae })
        ));
    }

    #[test]
    fn explicit_path_counts_mass_solves() {
        let sys = models::assemble_wave_1d(8, 1.0).unwrap();
        let exact = models::ExactSolution::D1(models::Separable1d {
            space: Arc::new(|x: f64| (std::f64::consts::PI * x).sin()),
            space_dx: Arc::new(|x: f64| std::f64::consts::PI * (std::f64::consts::PI * x).cos()),
            time: Arc::new(|t: f64| t.cos()),
            time_dt: Arc::new(|t: f64| -t.sin()),
            time_dtt: Arc::new(|t: f64| -t.cos()),
        });
        let y0 = models::interpolate(&sys, &exact, 0.0).unwrap();
        let v0 = models::interpolate_velocity(&sys, &exact, 0.0).unwrap();
        let mut stepper = RknStepper::new(
            &sys,
            classical_nystrom_tableau(),
            BcStrategy::Ode,
            SolverConfig::default(),
        );
        let state = StepState::new(0.0, y0, v0);
        let (_, report) = stepper.step(&state, 0.01).unwrap();
        assert_eq!(report.iterations, 4); // one mass solve per stage
    }

    #[test]
    fn gmres_matches_direct() {
        let sys = models::assemble_wave_1d(16, 1.0).unwrap();
        let exact = models::ExactSolution::D1(models::Separable1d {
            space: Arc::new(|x: f64| (std::f64::consts::PI * x).sin()),
            space_dx: Arc::new(|x: f64| std::f64::consts::PI * (std::f64::consts::PI * x).cos()),
            time: Arc::new(|t: f64| t.cos()),
            time_dt: Arc::new(|t: f64| -t.sin()),
            time_dtt: Arc::new(|t: f64| -t.cos()),
        });
        let y0 = models::interpolate(&sys, &exact, 0.0).unwrap();
        let v0 = models::interpolate_velocity(&sys, &exact, 0.0).unwrap();
        let state = StepState::new(0.0, y0, v0);
        let dt = 1.0 / 16.0;

        let mut direct = RknStepper::new(&sys, gl(2), BcStrategy::Ddae, SolverConfig::default());
        let (sd, _) = direct.step(&state, dt).unwrap();

        let mut cfg = SolverConfig::gmres(1e-12, Preconditioner::ClinesLd);
        cfg.atol = 1e-14;
        let mut krylov = RknStepper::new(&sys, gl(2), BcStrategy::Ddae, cfg);
        let (sk, report) = krylov.step(&state, dt).unwrap();
        assert!(report.iterations > 0);
        for (a, b) in sd.y.iter().zip(&sk.y) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
