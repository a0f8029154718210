//! Small dense matrices for tableau algebra.
//!
//! Everything here targets stage-count sized problems (s <= 5 or so);
//! no attempt is made at cache blocking or pivoting strategies beyond
//! plain partial pivoting.

use super::LinalgError;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DMat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Build from nested rows; panics if the rows are ragged.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self { rows: r, cols: c, data }
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn matmul(&self, other: &DMat) -> DMat {
        assert_eq!(self.cols, other.rows);
        let mut out = DMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.get(i, k);
                if aik == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += aik * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len());
        let mut y = vec![0.0; self.rows];
        for i in 0..self.rows {
            let mut acc = 0.0;
            for j in 0..self.cols {
                acc += self.get(i, j) * x[j];
            }
            y[i] = acc;
        }
        y
    }

    /// y = A^T x.
    pub fn transpose_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, x.len());
        let mut y = vec![0.0; self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            for j in 0..self.cols {
                y[j] += self.get(i, j) * xi;
            }
        }
        y
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &DMat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// True when every entry on or above the diagonal is exactly zero.
    pub fn is_strictly_lower(&self) -> bool {
        for i in 0..self.rows {
            for j in i..self.cols {
                if self.get(i, j) != 0.0 {
                    return false;
                }
            }
        }
        true
    }

    /// True when every entry strictly above the diagonal is exactly zero.
    pub fn is_lower(&self) -> bool {
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if self.get(i, j) != 0.0 {
                    return false;
                }
            }
        }
        true
    }

    /// Lower triangle including the diagonal; strict upper part zeroed.
    pub fn lower_part(&self) -> DMat {
        let mut out = DMat::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..=i.min(self.cols - 1) {
                out.set(i, j, self.get(i, j));
            }
        }
        out
    }

    /// Diagonal part only.
    pub fn diagonal_part(&self) -> DMat {
        let mut out = DMat::zeros(self.rows, self.cols);
        for i in 0..self.rows.min(self.cols) {
            out.set(i, i, self.get(i, i));
        }
        out
    }
}

/// Solve A x = b by LU with partial pivoting. A is copied.
pub fn lu_solve(a: &DMat, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let n = a.n_rows();
    if a.n_cols() != n || b.len() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            found: b.len(),
        });
    }
    let mut m = a.clone();
    let mut x = b.to_vec();
    let scale = m.max_abs();
    for k in 0..n {
        let mut p = k;
        for i in (k + 1)..n {
            if m.get(i, k).abs() > m.get(p, k).abs() {
                p = i;
            }
        }
        if m.get(p, k).abs() <= 1e-300 + 1e-15 * scale * f64::EPSILON {
            return Err(LinalgError::SingularMatrix { pivot: k });
        }
        if p != k {
            for j in 0..n {
                let t = m.get(k, j);
                m.set(k, j, m.get(p, j));
                m.set(p, j, t);
            }
            x.swap(k, p);
        }
        let piv = m.get(k, k);
        for i in (k + 1)..n {
            let l = m.get(i, k) / piv;
            if l == 0.0 {
                continue;
            }
            m.set(i, k, l);
            for j in (k + 1)..n {
                let v = m.get(i, j) - l * m.get(k, j);
                m.set(i, j, v);
            }
            x[i] -= l * x[k];
        }
    }
    for i in (0..n).rev() {
        let mut acc = x[i];
        for j in (i + 1)..n {
            acc -= m.get(i, j) * x[j];
        }
        x[i] = acc / m.get(i, i);
    }
    Ok(x)
}

/// Determinant via LU with partial pivoting; 0.0 on singular input.
pub fn determinant(a: &DMat) -> f64 {
    let n = a.n_rows();
    assert_eq!(a.n_cols(), n);
    let mut m = a.clone();
    let mut det = 1.0;
    for k in 0..n {
        let mut p = k;
        for i in (k + 1)..n {
            if m.get(i, k).abs() > m.get(p, k).abs() {
                p = i;
            }
        }
        if m.get(p, k) == 0.0 {
            return 0.0;
        }
        if p != k {
            for j in 0..n {
                let t = m.get(k, j);
                m.set(k, j, m.get(p, j));
                m.set(p, j, t);
            }
            det = -det;
        }
        let piv = m.get(k, k);
        det *= piv;
        for i in (k + 1)..n {
            let l = m.get(i, k) / piv;
            for j in (k + 1)..n {
                let v = m.get(i, j) - l * m.get(k, j);
                m.set(i, j, v);
            }
        }
    }
    det
}

/// LDU factorization without pivoting: A = L D U with L unit lower
/// triangular, D diagonal (returned as a vector), U unit upper
/// triangular. Fails when a leading principal minor vanishes.
pub fn ldu(a: &DMat) -> Result<(DMat, Vec<f64>, DMat), LinalgError> {
    let n = a.n_rows();
    assert_eq!(a.n_cols(), n);
    let mut w = a.clone();
    let scale = a.max_abs().max(1.0);
    for k in 0..n {
        let piv = w.get(k, k);
        if piv.abs() <= 1e-13 * scale {
            return Err(LinalgError::SingularFactorization { pivot: k });
        }
        for i in (k + 1)..n {
            let l = w.get(i, k) / piv;
            w.set(i, k, l);
            for j in (k + 1)..n {
                let v = w.get(i, j) - l * w.get(k, j);
                w.set(i, j, v);
            }
        }
    }
    let mut l = DMat::identity(n);
    let mut u = DMat::identity(n);
    let mut d = vec![0.0; n];
    for i in 0..n {
        d[i] = w.get(i, i);
        for j in 0..i {
            l.set(i, j, w.get(i, j));
        }
        for j in (i + 1)..n {
            u.set(i, j, w.get(i, j) / d[i]);
        }
    }
    Ok((l, d, u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn lu_solve_small() {
        let a = DMat::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]);
        let x = lu_solve(&a, &[5.0, 10.0]).unwrap();
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(x[1], 3.0, epsilon = 1e-14);
    }

    #[test]
    fn lu_solve_singular_errors() {
        let a = DMat::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(lu_solve(&a, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn ldu_reconstructs() {
        let a = DMat::from_rows(&[
            vec![4.0, 2.0, 1.0],
            vec![2.0, 5.0, 3.0],
            vec![1.0, 3.0, 6.0],
        ]);
        let (l, d, u) = ldu(&a).unwrap();
        let mut dm = DMat::zeros(3, 3);
        for i in 0..3 {
            dm.set(i, i, d[i]);
        }
        let rec = l.matmul(&dm).matmul(&u);
        assert!(rec.max_abs_diff(&a) < 1e-13);
    }

    #[test]
    fn ldu_zero_leading_minor_errors() {
        let a = DMat::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!(matches!(
            ldu(&a),
            Err(LinalgError::SingularFactorization { pivot: 0 })
        ));
    }

    #[test]
    fn determinant_2x2() {
        let a = DMat::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_abs_diff_eq!(determinant(&a), -2.0, epsilon = 1e-14);
    }
}
