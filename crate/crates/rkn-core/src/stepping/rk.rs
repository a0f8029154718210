//! Runge-Kutta stepping on the first-order reduction of a second-order
//! system.
//!
//! The reduction introduces z = (y, y_t) with
//!
//! ```text
//! Mhat z' + Khat z = fhat(t),
//! Mhat = blockdiag(W, M),   Khat = [[0, -W], [K, C]],   fhat = (0, f),
//! ```
//!
//! where W is the diagonal of the lumped mass matrix. Weighting the
//! identity block by W keeps the reduced stage systems scaled like the
//! Nystrom ones so solver comparisons stay fair; the trajectory is
//! unchanged (W cancels in exact arithmetic).
//!
//! Storage is interleaved per node, `z[2l] = y_l`, `z[2l+1] = (y_t)_l`,
//! which keeps `Khat` banded.

use super::{StepReport, SteppingError, StepState};
use crate::linalg::band::{factor_combination_with_identity_rows, BandLu};
use crate::linalg::dense::DMat;
use crate::linalg::{
    gmres_solve, lump_mass, BlockTriangularSolver, Preconditioner, RowConstraints, SolverConfig,
    SolverMethod, SparseMatrix, StageDirectSolver, StageOperator,
};
use crate::models::{SecondOrderSystem, TimeVec};
use crate::tableau::{triangular_approx, ButcherTableau, TableauKind, TriangularSource};
use std::sync::Arc;
use std::time::Instant;

/// Linear first-order system `Mhat z' + Khat z = fhat(t)` with optional
/// derivative-block Dirichlet rows.
pub struct FirstOrderSystem {
    /// Total unknowns (2m).
    pub dim: usize,
    /// Unknowns of the underlying second-order system.
    pub m: usize,
    pub mhat: SparseMatrix,
    pub khat: SparseMatrix,
    pub forcing: TimeVec,
    /// Global indices of constrained derivative components (2l+1) and
    /// the stage data h_tt restricted to the constrained set.
    pub constrained: Vec<usize>,
    pub acceleration: TimeVec,
    zero: SparseMatrix,
}

/// Interleave (y, y_t) into the reduced state vector.
pub fn pack_state(y: &[f64], y_t: &[f64]) -> Vec<f64> {
    let mut z = Vec::with_capacity(2 * y.len());
    for (a, b) in y.iter().zip(y_t) {
        z.push(*a);
        z.push(*b);
    }
    z
}

/// Split the reduced state vector back into (y, y_t).
pub fn split_state(z: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let m = z.len() / 2;
    let mut y = Vec::with_capacity(m);
    let mut y_t = Vec::with_capacity(m);
    for l in 0..m {
        y.push(z[2 * l]);
        y_t.push(z[2 * l + 1]);
    }
    (y, y_t)
}

/// Rewrite `M y'' + C y' + K y = f` as a first-order system in z = (y, y_t).
pub fn reduce_first_order(sys: &SecondOrderSystem) -> Result<FirstOrderSystem, SteppingError> {
    let m = sys.m;
    let w: Vec<f64> = lump_mass(&sys.mass)?.row_sums();
    let mut mhat_t = Vec::new();
    let mut khat_t = Vec::new();
    for l in 0..m {
        mhat_t.push((2 * l, 2 * l, w[l]));
        khat_t.push((2 * l, 2 * l + 1, -w[l]));
    }
    for (l, k, v) in sys.mass.iter() {
        mhat_t.push((2 * l + 1, 2 * k + 1, v));
    }
    for (l, k, v) in sys.stiffness.iter() {
        khat_t.push((2 * l + 1, 2 * k, v));
    }
    for (l, k, v) in sys.damping.iter() {
        khat_t.push((2 * l + 1, 2 * k + 1, v));
    }
    let dim = 2 * m;
    let mhat = SparseMatrix::from_triplets(dim, dim, &mhat_t).expect("in range");
    let khat = SparseMatrix::from_triplets(dim, dim, &khat_t).expect("in range");
    let forcing_src = sys.forcing.clone();
    let forcing: TimeVec = Arc::new(move |t: f64| {
        let f = forcing_src(t);
        let mut out = vec![0.0; 2 * f.len()];
        for (l, v) in f.iter().enumerate() {
            out[2 * l + 1] = *v;
        }
        out
    });
    let constrained: Vec<usize> = sys.dirichlet.indices.iter().map(|&l| 2 * l + 1).collect();
    Ok(FirstOrderSystem {
        dim,
        m,
        mhat,
        khat,
        forcing,
        constrained,
        acceleration: sys.dirichlet.acceleration.clone(),
        zero: SparseMatrix::zeros(dim, dim),
    })
}

enum RkPath<'a> {
    Explicit { mhat_lu: BandLu },
    /// Lower-triangular tableaux: block forward substitution is exact.
    Triangular { solver: BlockTriangularSolver<'a> },
    Direct { solver: StageDirectSolver },
    Gmres { precond: Option<BlockTriangularSolver<'a>> },
}

struct RkCache<'a> {
    dt: f64,
    path: RkPath<'a>,
}

/// Stateful RK stepper over a linear first-order system; factorizations
/// are cached per dt.
pub struct RkStepper<'a> {
    sys: &'a FirstOrderSystem,
    tab: ButcherTableau,
    cfg: SolverConfig,
    cache: Option<RkCache<'a>>,
}

impl<'a> RkStepper<'a> {
    pub fn new(sys: &'a FirstOrderSystem, tab: ButcherTableau, cfg: SolverConfig) -> Self {
        Self { sys, tab, cfg, cache: None }
    }

    /// Optional warm-up: build factorizations for the given dt ahead of
    /// the first step.
    pub fn prepare(&mut self, dt: f64) -> Result<(), SteppingError> {
        self.ensure_cache(dt)
    }

    fn row_constraints(&self) -> Option<RowConstraints> {
        if self.sys.constrained.is_empty() {
            None
        } else {
            Some(RowConstraints {
                indices: self.sys.constrained.clone(),
                coeff: DMat::identity(self.tab.s),
            })
        }
    }

    fn ensure_cache(&mut self, dt: f64) -> Result<(), SteppingError> {
        if let Some(c) = &self.cache {
            if c.dt == dt {
                return Ok(());
            }
        }
        let sys = self.sys;
        let s = self.tab.s;
        let zeros_s = DMat::zeros(s, s);
        let path = match (self.tab.kind, self.cfg.method) {
            (TableauKind::Explicit, _) => {
                let mhat_lu = factor_combination_with_identity_rows(
                    &[(1.0, &sys.mhat)],
                    &sys.constrained,
                )?;
                RkPath::Explicit { mhat_lu }
            }
            (TableauKind::DiagonallyImplicit, SolverMethod::Direct) => {
                let solver = BlockTriangularSolver::new(
                    &sys.mhat,
                    &sys.khat,
                    &sys.zero,
                    dt,
                    zeros_s.clone(),
                    self.tab.a.lower_part(),
                    self.row_constraints(),
                    self.row_constraints().map(|rc| rc.coeff.lower_part()),
                )?;
                RkPath::Triangular { solver }
            }
            (_, SolverMethod::Direct) => {
                let solver = StageDirectSolver::new(
                    &sys.mhat,
                    &sys.khat,
                    &sys.zero,
                    dt,
                    &zeros_s,
                    &self.tab.a,
                    self.row_constraints().as_ref(),
                )?;
                RkPath::Direct { solver }
            }
            (_, SolverMethod::Gmres) => {
                let precond = match self.cfg.preconditioner {
                    Preconditioner::None => None,
                    p => {
                        let source = match p {
                            Preconditioner::BlockDiagonal => TriangularSource::Diagonal,
                            Preconditioner::BlockLower => TriangularSource::LowerPart,
                            Preconditioner::ClinesLd => TriangularSource::ClinesLd,
                            Preconditioner::None => unreachable!(),
                        };
                        let a_t = triangular_approx(&self.tab.a, source)?;
                        let pc_coeff = self.row_constraints().map(|rc| match source {
                            TriangularSource::Diagonal => rc.coeff.diagonal_part(),
                            _ => rc.coeff.lower_part(),
                        });
                        Some(BlockTriangularSolver::new(
                            &sys.mhat,
                            &sys.khat,
                            &sys.zero,
                            dt,
                            zeros_s.clone(),
                            a_t.atilde,
                            self.row_constraints(),
                            pc_coeff,
                        )?)
                    }
                };
                RkPath::Gmres { precond }
            }
        };
        self.cache = Some(RkCache { dt, path });
        Ok(())
    }

    /// One RK step on z; z has the interleaved layout of
    /// [`reduce_first_order`].
    pub fn step(
        &mut self,
        t: f64,
        z: &[f64],
        dt: f64,
    ) -> Result<(Vec<f64>, StepReport), SteppingError> {
        if z.len() != self.sys.dim {
            return Err(SteppingError::DimensionMismatch {
                expected: self.sys.dim,
                found: z.len(),
            });
        }
        let start = Instant::now();
        self.ensure_cache(dt)?;
        let sys = self.sys;
        let (s, n) = (self.tab.s, sys.dim);
        let cache = self.cache.as_ref().expect("cache just ensured");

        let stages: Vec<f64>;
        let mut iterations = 0usize;
        let mut residual = 0.0;

        if let RkPath::Explicit { mhat_lu } = &cache.path {
            let mut k = vec![0.0; s * n];
            let mut kz = vec![0.0; n];
            for i in 0..s {
                let ti = t + self.tab.c[i] * dt;
                let mut zi = z.to_vec();
                for j in 0..i {
                    let aij = dt * self.tab.a.get(i, j);
                    if aij != 0.0 {
                        let kj = &k[j * n..(j + 1) * n];
                        for l in 0..n {
                            zi[l] += aij * kj[l];
                        }
                    }
                }
                sys.khat.spmv_into(&zi, &mut kz);
                let f = (sys.forcing)(ti);
                let mut acc: Vec<f64> = (0..n).map(|l| f[l] - kz[l]).collect();
                if !sys.constrained.is_empty() {
                    let vals = (sys.acceleration)(ti);
                    for (idx, &g) in sys.constrained.iter().enumerate() {
                        acc[g] = vals[idx];
                    }
                }
                mhat_lu.solve_in_place(&mut acc);
                iterations += 1;
                k[i * n..(i + 1) * n].copy_from_slice(&acc);
            }
            stages = k;
        } else {
            // rhs_i = fhat(t_i) - Khat z, with constrained rows replaced
            let mut kz = vec![0.0; n];
            sys.khat.spmv_into(z, &mut kz);
            let mut rhs = vec![0.0; s * n];
            for i in 0..s {
                let ti = t + self.tab.c[i] * dt;
                let f = (sys.forcing)(ti);
                let block = &mut rhs[i * n..(i + 1) * n];
                for l in 0..n {
                    block[l] = f[l] - kz[l];
                }
                if !sys.constrained.is_empty() {
                    let vals = (sys.acceleration)(ti);
                    for (idx, &g) in sys.constrained.iter().enumerate() {
                        block[g] = vals[idx];
                    }
                }
            }

            let op = StageOperator::new(
                &sys.mhat,
                &sys.khat,
                &sys.zero,
                dt,
                DMat::zeros(s, s),
                self.tab.a.clone(),
            );
            let row_constraints = self.row_constraints();
            let apply = |x: &[f64], y: &mut [f64]| {
                op.apply(x, y);
                if let Some(rc) = &row_constraints {
                    rc.apply_rows(x, y, n);
                }
            };

            match &cache.path {
                RkPath::Triangular { solver } => {
                    let mut k = vec![0.0; s * n];
                    solver.solve(&rhs, &mut k);
                    let mut bx = vec![0.0; s * n];
                    apply(&k, &mut bx);
                    residual = rhs
                        .iter()
                        .zip(&bx)
                        .map(|(r, b)| (r - b) * (r - b))
                        .sum::<f64>()
                        .sqrt();
                    stages = k;
                }
                RkPath::Direct { solver } => {
                    let k = solver.solve(&rhs);
                    let mut bx = vec![0.0; s * n];
                    apply(&k, &mut bx);
                    residual = rhs
                        .iter()
                        .zip(&bx)
                        .map(|(r, b)| (r - b) * (r - b))
                        .sum::<f64>()
                        .sqrt();
                    stages = k;
                }
                RkPath::Gmres { precond } => {
                    let result = match precond.as_ref() {
                        Some(p) => {
                            let pre = |r: &[f64], zv: &mut [f64]| p.solve(r, zv);
                            gmres_solve(&apply, Some(&pre), &rhs, &self.cfg)
                        }
                        None => gmres_solve(&apply, None, &rhs, &self.cfg),
                    }
                    .map_err(SteppingError::Linalg)?;
                    iterations = result.iterations;
                    residual = result.residual;
                    stages = result.x;
                }
                RkPath::Explicit { .. } => unreachable!("handled above"),
            }
        }

        let mut z_next = z.to_vec();
        for i in 0..s {
            let w = dt * self.tab.b[i];
            let ki = &stages[i * n..(i + 1) * n];
            for l in 0..n {
                z_next[l] += w * ki[l];
            }
        }
        let report = StepReport { iterations, residual, seconds: start.elapsed().as_secs_f64() };
        Ok((z_next, report))
    }

    /// Convenience wrapper mapping a second-order [`StepState`] through
    /// one reduced RK step.
    pub fn step_state(
        &mut self,
        state: &StepState,
        dt: f64,
    ) -> Result<(StepState, StepReport), SteppingError> {
        let z = pack_state(&state.y, &state.y_t);
        let (z_next, report) = self.step(state.t, &z, dt)?;
        let (y, y_t) = split_state(&z_next);
        Ok((StepState::new(state.t + dt, y, y_t), report))
    }
}
