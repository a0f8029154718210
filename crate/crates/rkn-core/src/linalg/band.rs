//! Banded storage and LU factorization with partial pivoting.
//!
//! Storage follows the LAPACK general-band convention: entry (i, j) of
//! an n x n matrix with kl subdiagonals and ku superdiagonals lives at
//! `data[(kl + ku + i - j) + j * ldab]` with `ldab = 2*kl + ku + 1`.
//! The extra kl rows at the top absorb fill produced by row pivoting.

use super::{LinalgError, SparseMatrix};

/// General band matrix builder.
#[derive(Clone, Debug)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        Self { n, kl, ku, ldab, data: vec![0.0; ldab * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n && j < self.n);
        debug_assert!(j <= i + self.ku && i <= j + self.kl, "entry outside band");
        self.kl + self.ku + i - j + j * self.ldab
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j);
        self.data[s] = v;
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j > i + self.ku || i > j + self.kl {
            return 0.0;
        }
        self.data[self.slot(i, j)]
    }

    /// Zero out an entire stored row.
    pub fn zero_row(&mut self, i: usize) {
        let lo = i.saturating_sub(self.kl);
        let hi = (i + self.ku).min(self.n - 1);
        for j in lo..=hi {
            let s = self.slot(i, j);
            self.data[s] = 0.0;
        }
    }

    /// Copy a sparse matrix into band storage scaled by `alpha`.
    /// Panics if an entry falls outside the band.
    pub fn add_sparse(&mut self, alpha: f64, m: &SparseMatrix) {
        if alpha == 0.0 {
            return;
        }
        for (i, j, v) in m.iter() {
            self.add(i, j, alpha * v);
        }
    }

    /// Factor in place with partial pivoting.
    pub fn factor(mut self) -> Result<BandLu, LinalgError> {
        let n = self.n;
        let (kl, ku, ldab) = (self.kl, self.ku, self.ldab);
        let mut ipiv = vec![0usize; n];
        // ju tracks the rightmost column touched by pivoting so far
        let mut ju = 0usize;
        let diag = kl + ku; // storage row of the diagonal
        for j in 0..n {
            let km = kl.min(n - 1 - j); // active subdiagonal count
            // pivot search in column j
            let mut jp = 0usize;
            let mut best = self.data[diag + j * ldab].abs();
            for i in 1..=km {
                let v = self.data[diag + i + j * ldab].abs();
                if v > best {
                    best = v;
                    jp = i;
                }
            }
            ipiv[j] = j + jp;
            if best == 0.0 {
                return Err(LinalgError::SingularMatrix { pivot: j });
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            // swap rows j and j+jp across columns j..=ju
            if jp != 0 {
                for col in j..=ju {
                    let a = diag + (j + jp) - col + col * ldab;
                    let b = diag + j - col + col * ldab;
                    self.data.swap(a, b);
                }
            }
            if km > 0 {
                let piv = self.data[diag + j * ldab];
                for i in 1..=km {
                    self.data[diag + i + j * ldab] /= piv;
                }
                for col in (j + 1)..=ju {
                    let upper = self.data[diag + j - col + col * ldab];
                    if upper == 0.0 {
                        continue;
                    }
                    for i in 1..=km {
                        let mult = self.data[diag + i + j * ldab];
                        self.data[diag + (j + i) - col + col * ldab] -= mult * upper;
                    }
                }
            }
        }
        Ok(BandLu { n, kl, ku, ldab, data: self.data, ipiv })
    }
}

/// Factored band matrix. Solves reuse the factorization.
#[derive(Clone, Debug)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    data: Vec<f64>,
    ipiv: Vec<usize>,
}

impl BandLu {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Solve A x = b in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let (kl, ku, ldab) = (self.kl, self.ku, self.ldab);
        let diag = kl + ku;
        // L solve (unit lower, with row interchanges)
        for j in 0..n {
            let lm = kl.min(n - 1 - j);
            let p = self.ipiv[j];
            if p != j {
                b.swap(p, j);
            }
            let bj = b[j];
            if bj != 0.0 {
                for i in 1..=lm {
                    b[j + i] -= self.data[diag + i + j * ldab] * bj;
                }
            }
        }
        // U solve (band width kl+ku after pivoting fill)
        for j in (0..n).rev() {
            b[j] /= self.data[diag + j * ldab];
            let bj = b[j];
            if bj != 0.0 {
                let lm = (kl + ku).min(j);
                for i in 1..=lm {
                    b[j - i] -= self.data[diag - i + j * ldab] * bj;
                }
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Assemble `alpha*A + beta*B + gamma*C` into band form sized to fit
/// all three patterns, then factor.
pub fn factor_combination(
    terms: &[(f64, &SparseMatrix)],
) -> Result<BandLu, LinalgError> {
    factor_combination_with_identity_rows(terms, &[])
}

/// Like [`factor_combination`] but with the given rows replaced by unit
/// rows, so that prescribed values pass through the solve unchanged and
/// cannot pollute the remaining unknowns.
pub fn factor_combination_with_identity_rows(
    terms: &[(f64, &SparseMatrix)],
    identity_rows: &[usize],
) -> Result<BandLu, LinalgError> {
    assert!(!terms.is_empty());
    let n = terms[0].1.n_rows();
    let mut bw = 0usize;
    for &(_, m) in terms {
        assert_eq!(m.n_rows(), n);
        assert_eq!(m.n_cols(), n);
        bw = bw.max(m.half_bandwidth());
    }
    let mut skip = vec![false; n];
    for &r in identity_rows {
        skip[r] = true;
    }
    let mut band = BandMatrix::new(n, bw, bw);
    for &(alpha, m) in terms {
        if alpha == 0.0 {
            continue;
        }
        for (i, j, v) in m.iter() {
            if !skip[i] {
                band.add(i, j, alpha * v);
            }
        }
    }
    for &r in identity_rows {
        band.set(r, r, 1.0);
    }
    band.factor()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut m: Vec<Vec<f64>> = a.to_vec();
        let mut x = b.to_vec();
        for k in 0..n {
            let mut p = k;
            for i in (k + 1)..n {
                if m[i][k].abs() > m[p][k].abs() {
                    p = i;
                }
            }
            m.swap(k, p);
            x.swap(k, p);
            for i in (k + 1)..n {
                let l = m[i][k] / m[k][k];
                for j in k..n {
                    m[i][j] -= l * m[k][j];
                }
                x[i] -= l * x[k];
            }
        }
        for i in (0..n).rev() {
            for j in (i + 1)..n {
                x[i] -= m[i][j] * x[j];
            }
            x[i] /= m[i][i];
        }
        x
    }

    #[test]
    fn random_banded_against_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..50 {
            let n = 3 + (trial % 17);
            let kl = trial % 4;
            let ku = (trial / 3) % 4;
            let mut dense = vec![vec![0.0; n]; n];
            let mut band = BandMatrix::new(n, kl, ku);
            for i in 0..n {
                for j in 0..n {
                    if j <= i + ku && i <= j + kl {
                        let mut v: f64 = rng.gen_range(-1.0..1.0);
                        if i == j {
                            v += 4.0; // keep comfortably nonsingular
                        }
                        dense[i][j] = v;
                        band.set(i, j, v);
                    }
                }
            }
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lu = band.factor().unwrap();
            let x = lu.solve(&b);
            let x_ref = dense_solve(&dense, &b);
            for (a, r) in x.iter().zip(&x_ref) {
                assert!((a - r).abs() < 1e-10, "band vs dense mismatch");
            }
        }
    }

    #[test]
    fn pivoting_required() {
        // leading zero diagonal forces a row swap
        let mut band = BandMatrix::new(2, 1, 1);
        band.set(0, 0, 0.0);
        band.set(0, 1, 1.0);
        band.set(1, 0, 1.0);
        band.set(1, 1, 1.0);
        let lu = band.factor().unwrap();
        let x = lu.solve(&[2.0, 3.0]);
        assert!((x[0] - 1.0).abs() < 1e-14);
        assert!((x[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn singular_detected() {
        let mut band = BandMatrix::new(2, 0, 0);
        band.set(0, 0, 1.0);
        band.set(1, 1, 0.0);
        assert!(band.factor().is_err());
    }
}
