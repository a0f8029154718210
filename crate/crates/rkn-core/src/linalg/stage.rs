//! The Kronecker-structured stage system and its preconditioners.
//!
//! An s-stage implicit method applied to `M y'' + C y' + K y = f` couples
//! all stages through
//!
//! ```text
//! B = I (x) M + dt A (x) C + dt^2 Abar (x) K,
//! ```
//!
//! acting on stacked stage vectors (stage-major: block i occupies
//! `x[i*m..(i+1)*m]`). `B` is never formed; only its action is computed.
//! Boundary rows may be overridden by stage-coupled constraint rows.

use super::band::{BandLu, BandMatrix};
use super::dense::DMat;
use super::{LinalgError, SparseMatrix};

/// Matrix-free action of the stage-coupled operator.
pub struct StageOperator<'a> {
    s: usize,
    m: usize,
    mass: &'a SparseMatrix,
    damping: &'a SparseMatrix,
    stiffness: &'a SparseMatrix,
    dt: f64,
    abar: DMat,
    a: DMat,
}

impl<'a> StageOperator<'a> {
    pub fn new(
        mass: &'a SparseMatrix,
        damping: &'a SparseMatrix,
        stiffness: &'a SparseMatrix,
        dt: f64,
        abar: DMat,
        a: DMat,
    ) -> Self {
        let m = mass.n_rows();
        let s = abar.n_rows();
        assert_eq!(abar.n_cols(), s);
        assert_eq!(a.n_rows(), s);
        assert_eq!(damping.n_rows(), m);
        assert_eq!(stiffness.n_rows(), m);
        Self { s, m, mass, damping, stiffness, dt, abar, a }
    }

    pub fn stages(&self) -> usize {
        self.s
    }

    pub fn block_dim(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.s * self.m
    }

    /// y = B x for stacked stage vectors.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim(), "stage vector length");
        assert_eq!(y.len(), self.dim());
        let m = self.m;
        let use_damping = self.damping.nnz() > 0;
        // per-stage products, computed once
        let mut cx = vec![0.0; if use_damping { self.s * m } else { 0 }];
        let mut kx = vec![0.0; self.s * m];
        for j in 0..self.s {
            if use_damping {
                self.damping.spmv_into(&x[j * m..(j + 1) * m], &mut cx[j * m..(j + 1) * m]);
            }
            self.stiffness.spmv_into(&x[j * m..(j + 1) * m], &mut kx[j * m..(j + 1) * m]);
        }
        for i in 0..self.s {
            let yi = &mut y[i * m..(i + 1) * m];
            self.mass.spmv_into(&x[i * m..(i + 1) * m], yi);
            for j in 0..self.s {
                let ck = self.dt * self.a.get(i, j);
                if use_damping && ck != 0.0 {
                    for (yv, cv) in yi.iter_mut().zip(&cx[j * m..(j + 1) * m]) {
                        *yv += ck * cv;
                    }
                }
                let kk = self.dt * self.dt * self.abar.get(i, j);
                if kk != 0.0 {
                    for (yv, kv) in yi.iter_mut().zip(&kx[j * m..(j + 1) * m]) {
                        *yv += kk * kv;
                    }
                }
            }
        }
    }
}

/// Stage-coupled row overrides for constrained degrees of freedom.
///
/// For each constrained index `l` and stage `i`, the system row `(i, l)`
/// becomes `sum_j coeff[i][j] * x[(j, l)] = rhs`. The caller chooses the
/// coefficients (identity, `dt^2*Abar`, `dt*A`, ...).
#[derive(Clone, Debug)]
pub struct RowConstraints {
    pub indices: Vec<usize>,
    pub coeff: DMat,
}

impl RowConstraints {
    /// Overwrite the constrained rows of `y = B x` with the constraint
    /// action on `x`.
    pub fn apply_rows(&self, x: &[f64], y: &mut [f64], m: usize) {
        let s = self.coeff.n_rows();
        for &l in &self.indices {
            for i in 0..s {
                let mut acc = 0.0;
                for j in 0..s {
                    let c = self.coeff.get(i, j);
                    if c != 0.0 {
                        acc += c * x[j * m + l];
                    }
                }
                y[i * m + l] = acc;
            }
        }
    }
}

fn is_constrained_mask(m: usize, constraints: Option<&RowConstraints>) -> Vec<bool> {
    let mut mask = vec![false; m];
    if let Some(rc) = constraints {
        for &l in &rc.indices {
            mask[l] = true;
        }
    }
    mask
}

/// Direct band factorization of the full stage system.
///
/// Internally the unknowns are interleaved by node so the coupled
/// system stays banded; the public interface speaks stage-major stacked
/// vectors like [`StageOperator`].
pub struct StageDirectSolver {
    s: usize,
    m: usize,
    lu: BandLu,
}

impl StageDirectSolver {
    pub fn new(
        mass: &SparseMatrix,
        damping: &SparseMatrix,
        stiffness: &SparseMatrix,
        dt: f64,
        abar: &DMat,
        a: &DMat,
        constraints: Option<&RowConstraints>,
    ) -> Result<Self, LinalgError> {
        let m = mass.n_rows();
        let s = abar.n_rows();
        let bw_node = mass
            .half_bandwidth()
            .max(damping.half_bandwidth())
            .max(stiffness.half_bandwidth());
        let bw = s * bw_node + (s - 1);
        let mut band = BandMatrix::new(s * m, bw, bw);
        let mask = is_constrained_mask(m, constraints);
        let g = |l: usize, i: usize| l * s + i;

        for (l, k, v) in mass.iter() {
            if mask[l] {
                continue;
            }
            for i in 0..s {
                band.add(g(l, i), g(k, i), v);
            }
        }
        if damping.nnz() > 0 {
            for (l, k, v) in damping.iter() {
                if mask[l] {
                    continue;
                }
                for i in 0..s {
                    for j in 0..s {
                        let c = dt * a.get(i, j);
                        if c != 0.0 {
                            band.add(g(l, i), g(k, j), c * v);
                        }
                    }
                }
            }
        }
        for (l, k, v) in stiffness.iter() {
            if mask[l] {
                continue;
            }
            for i in 0..s {
                for j in 0..s {
                    let c = dt * dt * abar.get(i, j);
                    if c != 0.0 {
                        band.add(g(l, i), g(k, j), c * v);
                    }
                }
            }
        }
        if let Some(rc) = constraints {
            for &l in &rc.indices {
                for i in 0..s {
                    for j in 0..s {
                        let c = rc.coeff.get(i, j);
                        if c != 0.0 {
                            band.add(g(l, i), g(l, j), c);
                        }
                    }
                }
            }
        }
        let lu = band.factor()?;
        Ok(Self { s, m, lu })
    }

    /// Solve B x = rhs (stage-major stacked layout).
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.s * self.m);
        let mut permuted = vec![0.0; rhs.len()];
        for i in 0..self.s {
            for l in 0..self.m {
                permuted[l * self.s + i] = rhs[i * self.m + l];
            }
        }
        self.lu.solve_in_place(&mut permuted);
        let mut out = vec![0.0; rhs.len()];
        for i in 0..self.s {
            for l in 0..self.m {
                out[i * self.m + l] = permuted[l * self.s + i];
            }
        }
        out
    }
}

/// Stage-segregated block lower-triangular preconditioner
///
/// ```text
/// P = I (x) M + dt Atilde_a (x) C + dt^2 Atilde_abar (x) K
/// ```
///
/// with lower-triangular stage couplings, applied by forward block
/// substitution. The diagonal blocks are factored once (band LU) and
/// reused across applications at fixed dt.
pub struct BlockTriangularSolver<'a> {
    s: usize,
    m: usize,
    dt: f64,
    atilde_abar: DMat,
    atilde_a: DMat,
    damping: &'a SparseMatrix,
    stiffness: &'a SparseMatrix,
    factors: Vec<BandLu>,
    constraints: Option<RowConstraints>,
    /// lower-triangular coefficients used on constrained rows
    precond_coeff: Option<DMat>,
}

impl<'a> BlockTriangularSolver<'a> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        mass: &SparseMatrix,
        damping: &'a SparseMatrix,
        stiffness: &'a SparseMatrix,
        dt: f64,
        atilde_abar: DMat,
        atilde_a: DMat,
        constraints: Option<RowConstraints>,
        precond_coeff: Option<DMat>,
    ) -> Result<Self, LinalgError> {
        let m = mass.n_rows();
        let s = atilde_abar.n_rows();
        assert!(atilde_abar.is_lower() && atilde_a.is_lower(), "triangular approximation");
        let mask = is_constrained_mask(m, constraints.as_ref());
        let bw = mass
            .half_bandwidth()
            .max(damping.half_bandwidth())
            .max(stiffness.half_bandwidth());
        let mut factors = Vec::with_capacity(s);
        for i in 0..s {
            let mut band = BandMatrix::new(m, bw, bw);
            for (l, k, v) in mass.iter() {
                if !mask[l] {
                    band.add(l, k, v);
                }
            }
            let ca = dt * atilde_a.get(i, i);
            if ca != 0.0 {
                for (l, k, v) in damping.iter() {
                    if !mask[l] {
                        band.add(l, k, ca * v);
                    }
                }
            }
            let ck = dt * dt * atilde_abar.get(i, i);
            if ck != 0.0 {
                for (l, k, v) in stiffness.iter() {
                    if !mask[l] {
                        band.add(l, k, ck * v);
                    }
                }
            }
            if let (Some(rc), Some(pc)) = (constraints.as_ref(), precond_coeff.as_ref()) {
                for &l in &rc.indices {
                    let d = pc.get(i, i);
                    if d == 0.0 {
                        return Err(LinalgError::SingularDiagonalBlock { stage: i });
                    }
                    band.set(l, l, d);
                }
            }
            let lu = band
                .factor()
                .map_err(|_| LinalgError::SingularDiagonalBlock { stage: i })?;
            factors.push(lu);
        }
        Ok(Self {
            s,
            m,
            dt,
            atilde_abar,
            atilde_a,
            damping,
            stiffness,
            factors,
            constraints,
            precond_coeff,
        })
    }

    pub fn dim(&self) -> usize {
        self.s * self.m
    }

    /// x = P^{-1} rhs by forward block substitution.
    pub fn solve(&self, rhs: &[f64], x: &mut [f64]) {
        assert_eq!(rhs.len(), self.dim());
        assert_eq!(x.len(), self.dim());
        let m = self.m;
        let mut work = vec![0.0; m];
        let mut prod = vec![0.0; m];
        for i in 0..self.s {
            work.copy_from_slice(&rhs[i * m..(i + 1) * m]);
            for j in 0..i {
                let kappa_j = &x[j * m..(j + 1) * m];
                let ca = self.dt * self.atilde_a.get(i, j);
                if ca != 0.0 && self.damping.nnz() > 0 {
                    self.damping.spmv_into(kappa_j, &mut prod);
                    for (w, p) in work.iter_mut().zip(&prod) {
                        *w -= ca * p;
                    }
                }
                let ck = self.dt * self.dt * self.atilde_abar.get(i, j);
                if ck != 0.0 {
                    self.stiffness.spmv_into(kappa_j, &mut prod);
                    for (w, p) in work.iter_mut().zip(&prod) {
                        *w -= ck * p;
                    }
                }
            }
            if let (Some(rc), Some(pc)) = (self.constraints.as_ref(), self.precond_coeff.as_ref()) {
                for &l in &rc.indices {
                    let mut acc = rhs[i * m + l];
                    for j in 0..i {
                        let c = pc.get(i, j);
                        if c != 0.0 {
                            acc -= c * x[j * m + l];
                        }
                    }
                    work[l] = acc;
                }
            }
            self.factors[i].solve_in_place(&mut work);
            x[i * m..(i + 1) * m].copy_from_slice(&work);
        }
    }
}
