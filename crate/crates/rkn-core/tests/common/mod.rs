//! Shared oracles for integration tests. Everything here is an
//! independent computation path: dense assembly and classical dense
//! eigensolves, never the CSR/matrix-free routines under test.
#![allow(dead_code)] // each test binary uses a subset

use rkn_core::linalg::dense::DMat;
use rkn_core::linalg::SparseMatrix;

/// Dense assembly of the stage-coupled matrix
/// `I (x) M + dt A (x) C + dt^2 Abar (x) K` in stage-major ordering.
pub fn dense_stage_matrix(
    mass: &SparseMatrix,
    damping: &SparseMatrix,
    stiffness: &SparseMatrix,
    dt: f64,
    abar: &DMat,
    a: &DMat,
) -> DMat {
    let m = mass.n_rows();
    let s = abar.n_rows();
    let md = mass.to_dense();
    let cd = damping.to_dense();
    let kd = stiffness.to_dense();
    let mut b = DMat::zeros(s * m, s * m);
    for i in 0..s {
        for j in 0..s {
            for l in 0..m {
                for k in 0..m {
                    let mut v = 0.0;
                    if i == j {
                        v += md.get(l, k);
                    }
                    v += dt * a.get(i, j) * cd.get(l, k);
                    v += dt * dt * abar.get(i, j) * kd.get(l, k);
                    if v != 0.0 {
                        b.set(i * m + l, j * m + k, b.get(i * m + l, j * m + k) + v);
                    }
                }
            }
        }
    }
    b
}

/// Eigenvalues of a symmetric dense matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(sym: &DMat) -> Vec<f64> {
    let n = sym.n_rows();
    let mut a = sym.clone();
    for _sweep in 0..200 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a.get(i, j).abs();
            }
        }
        if off < 1e-14 * (1.0 + a.max_abs()) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
            }
        }
    }
    (0..n).map(|i| a.get(i, i)).collect()
}

/// Largest eigenvalue of the symmetric generalized problem
/// `K x = lambda M x` via dense Cholesky reduction and Jacobi.
pub fn dense_generalized_eig_max(stiffness: &SparseMatrix, mass: &SparseMatrix) -> f64 {
    let n = mass.n_rows();
    let md = mass.to_dense();
    let kd = stiffness.to_dense();
    // Cholesky M = L L^T
    let mut l = vec![vec![0.0_f64; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = md.get(i, j);
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                assert!(sum > 0.0, "mass matrix must be SPD");
                l[i][i] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    // B = L^{-1} K L^{-T}: solve L X = K (column-wise), then L Y^T = X^T
    let mut x = vec![vec![0.0_f64; n]; n];
    for col in 0..n {
        for i in 0..n {
            let mut sum = kd.get(i, col);
            for k in 0..i {
                sum -= l[i][k] * x[k][col];
            }
            x[i][col] = sum / l[i][i];
        }
    }
    let mut b = DMat::zeros(n, n);
    for row in 0..n {
        // solve L z = x[row][:]^T
        let mut z = vec![0.0_f64; n];
        for i in 0..n {
            let mut sum = x[row][i];
            for k in 0..i {
                sum -= l[i][k] * z[k];
            }
            z[i] = sum / l[i][i];
        }
        for i in 0..n {
            b.set(row, i, z[i]);
        }
    }
    // symmetrize against roundoff before Jacobi
    let mut bs = DMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            bs.set(i, j, 0.5 * (b.get(i, j) + b.get(j, i)));
        }
    }
    jacobi_eigenvalues(&bs)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Discrete L2 norm sqrt(e^T M e).
pub fn discrete_l2(mass: &SparseMatrix, e: &[f64]) -> f64 {
    let me = mass.spmv(e).expect("dims");
    e.iter().zip(&me).map(|(a, b)| a * b).sum::<f64>().sqrt()
}
