//! Dominant generalized eigenvalue by power iteration.

use super::band::factor_combination;
use super::{LinalgError, SparseMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Deterministic pseudo-random unit vector (fixed-seed ChaCha stream).
pub fn seeded_unit_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nrm > 0.0 {
        for x in v.iter_mut() {
            *x /= nrm;
        }
    }
    v
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Estimate the dominant eigenvalue of `K x = lambda M x` by power
/// iteration on `M^{-1} K`, with the Rayleigh quotient as the eigenvalue
/// estimate. `M` must be symmetric positive definite (it is factored
/// once and reused), `K` symmetric positive semidefinite.
///
/// Returns once the relative change of the estimate drops below `tol`.
pub fn power_iteration_genev(
    stiffness: &SparseMatrix,
    mass: &SparseMatrix,
    tol: f64,
    max_iters: usize,
) -> Result<f64, LinalgError> {
    let n = mass.n_rows();
    if stiffness.n_rows() != n || stiffness.n_cols() != n || mass.n_cols() != n {
        return Err(LinalgError::DimensionMismatch { expected: n, found: stiffness.n_rows() });
    }
    let mass_lu = factor_combination(&[(1.0, mass)])?;
    let mut x = seeded_unit_vector(n, 0x5eed_0001);
    let mut lambda_prev = f64::NAN;
    let mut kx = vec![0.0; n];
    let mut mx = vec![0.0; n];
    for _ in 0..max_iters {
        stiffness.spmv_into(&x, &mut kx);
        mass.spmv_into(&x, &mut mx);
        let num = dot(&x, &kx);
        let den = dot(&x, &mx);
        let lambda = num / den;
        if num.abs() <= 1e-300 * den.abs().max(1.0) {
            // K annihilates the iterate: dominant eigenvalue is zero
            return Ok(0.0);
        }
        if lambda_prev.is_finite() {
            let change = (lambda - lambda_prev).abs();
            if change <= tol * lambda.abs().max(f64::MIN_POSITIVE) {
                return Ok(lambda);
            }
        }
        lambda_prev = lambda;
        // x <- M^{-1} K x, normalized
        let mut z = kx.clone();
        mass_lu.solve_in_place(&mut z);
        let nrm = dot(&z, &z).sqrt();
        if nrm == 0.0 {
            return Ok(0.0);
        }
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi = zi / nrm;
        }
    }
    Err(LinalgError::EigNonConvergence { last: lambda_prev })
}
