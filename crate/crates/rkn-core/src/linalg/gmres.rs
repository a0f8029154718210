//! Restarted GMRES with optional right preconditioning.

use super::{LinalgError, SolverConfig};

/// Outcome of a converged GMRES solve.
#[derive(Clone, Debug)]
pub struct GmresResult {
    pub x: Vec<f64>,
    /// Total inner (Arnoldi) iterations across all restart cycles.
    pub iterations: usize,
    /// True residual norm `||b - A x||` at exit.
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solve A x = b with restarted GMRES, right-preconditioned by `precond`
/// (an application of an approximate inverse). Right preconditioning
/// keeps the iteration's residual equal to the true residual, so the
/// convergence test `||b - A x|| <= max(rtol*||b||, atol)` is exact.
///
/// On nonconvergence the error carries the best iterate found.
pub fn gmres_solve(
    apply: &dyn Fn(&[f64], &mut [f64]),
    precond: Option<&dyn Fn(&[f64], &mut [f64])>,
    rhs: &[f64],
    cfg: &SolverConfig,
) -> Result<GmresResult, LinalgError> {
    let n = rhs.len();
    let tol = (cfg.rtol * norm(rhs)).max(cfg.atol);
    let mut x = vec![0.0; n];
    let mut total_iters = 0usize;

    let apply_precond = |src: &[f64], dst: &mut [f64]| match precond {
        Some(p) => p(src, dst),
        None => dst.copy_from_slice(src),
    };

    let mut ax = vec![0.0; n];
    let mut final_residual;
    loop {
        // true residual for this cycle
        apply(&x, &mut ax);
        let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let beta = norm(&r);
        final_residual = beta;
        if beta <= tol {
            return Ok(GmresResult { x, iterations: total_iters, residual: beta });
        }
        if total_iters >= cfg.max_iters {
            break;
        }

        let m = cfg.restart.max(1);
        let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        for e in r.iter_mut() {
            *e /= beta;
        }
        v.push(r);

        let mut h = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;

        let mut k_used = 0usize;
        let mut converged = false;
        let mut z = vec![0.0; n];
        for k in 0..m {
            if total_iters >= cfg.max_iters {
                break;
            }
            total_iters += 1;
            // w = A M^{-1} v_k
            apply_precond(&v[k], &mut z);
            let mut w = vec![0.0; n];
            apply(&z, &mut w);
            // modified Gram-Schmidt
            for j in 0..=k {
                h[j][k] = dot(&w, &v[j]);
                let hj = h[j][k];
                for (wi, vi) in w.iter_mut().zip(&v[j]) {
                    *wi -= hj * vi;
                }
            }
            h[k + 1][k] = norm(&w);
            if h[k + 1][k] > 0.0 {
                for e in w.iter_mut() {
                    *e /= h[k + 1][k];
                }
            }
            v.push(w);
            // apply accumulated Givens rotations to the new column
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let denom = (h[k][k] * h[k][k] + h[k + 1][k] * h[k + 1][k]).sqrt();
            if denom == 0.0 {
                // exact breakdown: current least-squares solution is exact
                k_used = k + 1;
                converged = true;
                break;
            }
            cs[k] = h[k][k] / denom;
            sn[k] = h[k + 1][k] / denom;
            h[k][k] = denom;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            if g[k + 1].abs() <= tol {
                converged = true;
                break;
            }
        }

        if k_used > 0 {
            // back substitution for the small least-squares system
            let mut y = vec![0.0; k_used];
            for i in (0..k_used).rev() {
                let mut acc = g[i];
                for j in (i + 1)..k_used {
                    acc -= h[i][j] * y[j];
                }
                y[i] = acc / h[i][i];
            }
            // x += M^{-1} (V y)
            let mut update = vec![0.0; n];
            for (j, &yj) in y.iter().enumerate() {
                for (ui, vi) in update.iter_mut().zip(&v[j]) {
                    *ui += yj * vi;
                }
            }
            apply_precond(&update, &mut z);
            for (xi, zi) in x.iter_mut().zip(&z) {
                *xi += zi;
            }
        }

        if converged {
            // verify against the true residual; keep iterating if the
            // least-squares estimate was optimistic
            apply(&x, &mut ax);
            let res = rhs.iter().zip(&ax).map(|(b, a)| (b - a) * (b - a)).sum::<f64>().sqrt();
            final_residual = res;
            if res <= tol {
                return Ok(GmresResult { x, iterations: total_iters, residual: res });
            }
        }
        if total_iters >= cfg.max_iters {
            break;
        }
    }

    Err(LinalgError::NonConvergence {
        iterations: total_iters,
        residual: final_residual,
        best: x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SparseMatrix;

    fn cfg() -> SolverConfig {
        SolverConfig { rtol: 1e-10, ..SolverConfig::default() }
    }

    #[test]
    fn identity_in_one_iteration() {
        let apply = |x: &[f64], y: &mut [f64]| y.copy_from_slice(x);
        let rhs = vec![3.0, -1.0, 2.5];
        let r = gmres_solve(&apply, None, &rhs, &cfg()).unwrap();
        assert!(r.iterations <= 1);
        for (a, b) in r.x.iter().zip(&rhs) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn exact_preconditioner_one_iteration() {
        let a = SparseMatrix::from_triplets(
            3,
            3,
            &[(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0), (2, 2, 2.0)],
        )
        .unwrap();
        // inverse computed by dense solve per application
        let ad = a.to_dense();
        let apply = |x: &[f64], y: &mut [f64]| a.spmv_into(x, y);
        let pre = move |x: &[f64], y: &mut [f64]| {
            let sol = crate::linalg::dense::lu_solve(&ad, x).unwrap();
            y.copy_from_slice(&sol);
        };
        let rhs = vec![1.0, 2.0, 3.0];
        let r = gmres_solve(&apply, Some(&pre), &rhs, &cfg()).unwrap();
        assert_eq!(r.iterations, 1);
    }

    #[test]
    fn diagonal_three_distinct_eigenvalues() {
        let a = SparseMatrix::from_diagonal(&[1.0, 2.0, 4.0]);
        let apply = |x: &[f64], y: &mut [f64]| a.spmv_into(x, y);
        let rhs = vec![1.0, 1.0, 1.0];
        let r = gmres_solve(&apply, None, &rhs, &cfg()).unwrap();
        assert!(r.iterations <= 3);
        let expect = [1.0, 0.5, 0.25];
        for (a, b) in r.x.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_rhs_zero_solution() {
        let apply = |x: &[f64], y: &mut [f64]| y.copy_from_slice(x);
        let r = gmres_solve(&apply, None, &[0.0, 0.0], &cfg()).unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.x, vec![0.0, 0.0]);
    }

    #[test]
    fn nonconvergence_carries_best_iterate() {
        // singular operator cannot reach the tolerance
        let a = SparseMatrix::from_diagonal(&[1.0, 0.0]);
        let apply = |x: &[f64], y: &mut [f64]| a.spmv_into(x, y);
        let mut c = cfg();
        c.max_iters = 5;
        match gmres_solve(&apply, None, &[1.0, 1.0], &c) {
            Err(LinalgError::NonConvergence { iterations, residual, best }) => {
                assert!(iterations <= 5);
                assert!(residual > 0.0);
                assert_eq!(best.len(), 2);
            }
            other => panic!("expected nonconvergence, got {other:?}"),
        }
    }
}
