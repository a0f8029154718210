//! Brute-force oracles for the matrix-free stage operator: the action
//! must match an explicitly assembled dense Kronecker matrix.

mod common;

use common::dense_stage_matrix;
use proptest::prelude::*;
use rkn_core::linalg::dense::DMat;
use rkn_core::linalg::{seeded_unit_vector, SparseMatrix, StageOperator};
use rkn_core::models;
use rkn_core::tableau::{
    by_name, classical_nystrom_tableau, extend_tableau, NamedTableau, NystromTableau,
};

fn nystrom(name: &str) -> NystromTableau {
    match by_name(name).unwrap() {
        NamedTableau::Rk(t) => extend_tableau(&t),
        NamedTableau::NystromOnly(n) => n,
    }
}

fn check_model(sys: &models::SecondOrderSystem, tab: &NystromTableau, dt: f64, tol: f64) {
    let s = tab.s;
    assert!(s * sys.m <= 60, "oracle intended for small systems");
    let op = StageOperator::new(
        &sys.mass,
        &sys.damping,
        &sys.stiffness,
        dt,
        tab.abar.clone(),
        tab.a.clone(),
    );
    let dense = dense_stage_matrix(&sys.mass, &sys.damping, &sys.stiffness, dt, &tab.abar, &tab.a);
    let x = seeded_unit_vector(s * sys.m, 0xabcd);
    let mut y = vec![0.0; s * sys.m];
    op.apply(&x, &mut y);
    let y_ref = dense.mul_vec(&x);
    for (a, b) in y.iter().zip(&y_ref) {
        assert!((a - b).abs() < tol, "stage_apply disagrees with dense oracle");
    }
}

#[test]
fn stage_apply_matches_dense_kron_on_all_models() {
    let gl2 = nystrom("gl2");
    let radau2 = nystrom("radau2");
    let ny4 = classical_nystrom_tableau();

    // two-stage tableaux: m <= 30
    for tab in [&gl2, &radau2] {
        check_model(&models::assemble_wave_1d(16, 1.0).unwrap(), tab, 1.0 / 16.0, 1e-12);
        check_model(&models::assemble_wave_2d(4).unwrap(), tab, 0.25, 1e-12);
        check_model(&models::assemble_telegraph_1d(16).unwrap(), tab, 1.0 / 16.0, 1e-12);
        check_model(&models::assemble_beam_1d(8).unwrap(), tab, 1.0 / 8.0, 1e-12);
        check_model(&models::oscillator(), tab, 0.1, 1e-12);
    }
    // four stages: m <= 15
    check_model(&models::assemble_wave_1d(8, 1.0).unwrap(), &ny4, 0.125, 1e-12);
    check_model(&models::assemble_wave_2d(2).unwrap(), &ny4, 0.5, 1e-12);
    check_model(&models::assemble_telegraph_1d(8).unwrap(), &ny4, 0.125, 1e-12);
    check_model(&models::assemble_beam_1d(4).unwrap(), &ny4, 0.25, 1e-12);
}

#[test]
fn telegraph_two_stage_block_matrix() {
    // the 2x2 block system for the telegraph equation:
    // diag blocks (1 + a_ii dt) M + abar_ii dt^2 K,
    // off blocks  a_ij dt M + abar_ij dt^2 K   (here C = M)
    let sys = models::assemble_telegraph_1d(2).unwrap(); // 3 DOFs
    let tab = nystrom("gl2");
    let dt = 0.2;
    let m = sys.m;
    let md = sys.mass.to_dense();
    let kd = sys.stiffness.to_dense();
    let mut blocks = DMat::zeros(2 * m, 2 * m);
    for i in 0..2 {
        for j in 0..2 {
            for l in 0..m {
                for k in 0..m {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    let v = (delta + tab.a.get(i, j) * dt) * md.get(l, k)
                        + tab.abar.get(i, j) * dt * dt * kd.get(l, k);
                    blocks.set(i * m + l, j * m + k, v);
                }
            }
        }
    }
    let op = StageOperator::new(
        &sys.mass,
        &sys.damping,
        &sys.stiffness,
        dt,
        tab.abar.clone(),
        tab.a.clone(),
    );
    let x = seeded_unit_vector(2 * m, 99);
    let mut y = vec![0.0; 2 * m];
    op.apply(&x, &mut y);
    let y_ref = blocks.mul_vec(&x);
    for (a, b) in y.iter().zip(&y_ref) {
        assert!((a - b).abs() < 1e-13);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// stage_apply equals the dense Kronecker action for random small
    /// symmetric tridiagonal M, C, K and random stage couplings.
    #[test]
    fn stage_apply_random_systems(
        m in 2usize..8,
        s in 1usize..4,
        dt in 0.01f64..2.0,
        seed in 0u64..1000,
    ) {
        let mut diag_entries = Vec::new();
        let mut off_entries = Vec::new();
        for l in 0..m {
            diag_entries.push((l, l, 2.0 + ((l * 7 + seed as usize) % 5) as f64 * 0.3));
            if l + 1 < m {
                let v = 0.2 + ((l + seed as usize) % 3) as f64 * 0.1;
                off_entries.push((l, l + 1, v));
                off_entries.push((l + 1, l, v));
            }
        }
        let mut all = diag_entries.clone();
        all.extend(off_entries.iter().copied());
        let mass = SparseMatrix::from_triplets(m, m, &all).unwrap();
        let damping = SparseMatrix::from_triplets(m, m, &diag_entries).unwrap();
        let stiffness = SparseMatrix::from_triplets(m, m, &off_entries).unwrap();

        let mut abar = DMat::zeros(s, s);
        let mut a = DMat::zeros(s, s);
        for i in 0..s {
            for j in 0..s {
                abar.set(i, j, (((i * 3 + j * 5 + seed as usize) % 7) as f64 - 3.0) / 7.0);
                a.set(i, j, (((i * 5 + j * 3 + seed as usize) % 5) as f64 - 2.0) / 5.0);
            }
        }
        let op = StageOperator::new(&mass, &damping, &stiffness, dt, abar.clone(), a.clone());
        let dense = dense_stage_matrix(&mass, &damping, &stiffness, dt, &abar, &a);
        let x = seeded_unit_vector(s * m, seed);
        let mut y = vec![0.0; s * m];
        op.apply(&x, &mut y);
        let y_ref = dense.mul_vec(&x);
        for (p, q) in y.iter().zip(&y_ref) {
            prop_assert!((p - q).abs() < 1e-12);
        }
    }
}
