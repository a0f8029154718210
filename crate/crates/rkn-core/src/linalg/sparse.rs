//! Compressed sparse row matrices.

use super::LinalgError;
use crate::linalg::dense::DMat;

/// Sparse matrix in CSR form. Column indices are strictly increasing
/// within each row; duplicate triplets are summed at construction.
#[derive(Clone, Debug)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Build from (row, col, value) triplets, summing duplicates.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        entries: &[(usize, usize, f64)],
    ) -> Result<Self, LinalgError> {
        for &(r, c, _) in entries {
            if r >= n_rows || c >= n_cols {
                return Err(LinalgError::IndexOutOfRange { row: r, col: c, n_rows, n_cols });
            }
        }
        let mut sorted: Vec<(usize, usize, f64)> = entries.to_vec();
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values = Vec::with_capacity(sorted.len());
        let mut counts = vec![0usize; n_rows];
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in &sorted {
            if last == Some((r, c)) {
                *values.last_mut().expect("nonempty after first push") += v;
            } else {
                col_idx.push(c);
                values.push(v);
                counts[r] += 1;
                last = Some((r, c));
            }
        }
        let mut row_ptr = vec![0usize; n_rows + 1];
        for r in 0..n_rows {
            row_ptr[r + 1] = row_ptr[r] + counts[r];
        }
        Ok(Self { n_rows, n_cols, row_ptr, col_idx, values })
    }

    /// n x n identity.
    pub fn identity(n: usize) -> Self {
        let entries: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(n, n, &entries).expect("identity in range")
    }

    /// Diagonal matrix from a vector.
    pub fn from_diagonal(d: &[f64]) -> Self {
        let entries: Vec<_> = d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Self::from_triplets(d.len(), d.len(), &entries).expect("diagonal in range")
    }

    /// Empty (all-zero) matrix.
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self { n_rows, n_cols, row_ptr: vec![0; n_rows + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entries of row `i` as (col, value) pairs.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.col_idx[lo..hi].iter().copied().zip(self.values[lo..hi].iter().copied())
    }

    /// All stored entries as (row, col, value).
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    /// y = A x.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if x.len() != self.n_cols {
            return Err(LinalgError::DimensionMismatch { expected: self.n_cols, found: x.len() });
        }
        let mut y = vec![0.0; self.n_rows];
        self.spmv_into(x, &mut y);
        Ok(y)
    }

    /// y = A x without allocating; panics on dimension mismatch.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n_cols);
        assert_eq!(y.len(), self.n_rows);
        for i in 0..self.n_rows {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = acc;
        }
    }

    /// y += alpha * A x; panics on dimension mismatch.
    pub fn add_spmv(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n_cols);
        assert_eq!(y.len(), self.n_rows);
        if alpha == 0.0 {
            return;
        }
        for i in 0..self.n_rows {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[i] += alpha * acc;
        }
    }

    /// Row sums.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n_rows)
            .map(|i| self.row(i).map(|(_, v)| v).sum())
            .collect()
    }

    /// Maximum |i - j| over stored entries.
    pub fn half_bandwidth(&self) -> usize {
        let mut bw = 0usize;
        for (i, j, _) in self.iter() {
            bw = bw.max(i.abs_diff(j));
        }
        bw
    }

    /// Kronecker product A (x) B.
    pub fn kron(a: &SparseMatrix, b: &SparseMatrix) -> SparseMatrix {
        let n_rows = a.n_rows * b.n_rows;
        let n_cols = a.n_cols * b.n_cols;
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::with_capacity(a.nnz() * b.nnz());
        let mut values = Vec::with_capacity(a.nnz() * b.nnz());
        row_ptr.push(0);
        for ia in 0..a.n_rows {
            for ib in 0..b.n_rows {
                for ka in a.row_ptr[ia]..a.row_ptr[ia + 1] {
                    let (ja, va) = (a.col_idx[ka], a.values[ka]);
                    for kb in b.row_ptr[ib]..b.row_ptr[ib + 1] {
                        col_idx.push(ja * b.n_cols + b.col_idx[kb]);
                        values.push(va * b.values[kb]);
                    }
                }
                row_ptr.push(col_idx.len());
            }
        }
        SparseMatrix { n_rows, n_cols, row_ptr, col_idx, values }
    }

    /// Restriction to the given (sorted) row and column index sets.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> SparseMatrix {
        let mut col_map = vec![usize::MAX; self.n_cols];
        for (new, &old) in cols.iter().enumerate() {
            col_map[old] = new;
        }
        let mut entries = Vec::new();
        for (new_r, &old_r) in rows.iter().enumerate() {
            for (j, v) in self.row(old_r) {
                if col_map[j] != usize::MAX {
                    entries.push((new_r, col_map[j], v));
                }
            }
        }
        SparseMatrix::from_triplets(rows.len(), cols.len(), &entries).expect("mapped in range")
    }

    /// Dense copy; intended for small systems and test oracles.
    pub fn to_dense(&self) -> DMat {
        let mut out = DMat::zeros(self.n_rows, self.n_cols);
        for (i, j, v) in self.iter() {
            out.set(i, j, out.get(i, j) + v);
        }
        out
    }

    /// max |A - A^T| over all positions.
    pub fn symmetry_defect(&self) -> f64 {
        let mut t = std::collections::HashMap::new();
        for (i, j, v) in self.iter() {
            *t.entry((i, j)).or_insert(0.0) += v;
        }
        let mut defect: f64 = 0.0;
        for (&(i, j), &v) in &t {
            let vt = t.get(&(j, i)).copied().unwrap_or(0.0);
            defect = defect.max((v - vt).abs());
        }
        defect
    }
}

/// Diagonal (row-sum) mass lumping. For Q1 tensor-product elements this
/// coincides with Gauss-Lobatto quadrature of the mass matrix.
pub fn lump_mass(m: &SparseMatrix) -> Result<SparseMatrix, LinalgError> {
    if m.n_rows() != m.n_cols() {
        return Err(LinalgError::DimensionMismatch { expected: m.n_rows(), found: m.n_cols() });
    }
    let sums = m.row_sums();
    for (i, &s) in sums.iter().enumerate() {
        if s <= 0.0 {
            return Err(LinalgError::LumpingInvalid { row: i, sum: s });
        }
    }
    Ok(SparseMatrix::from_diagonal(&sums))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_entry() {
        let m = SparseMatrix::from_triplets(1, 1, &[(0, 0, 2.0)]).unwrap();
        assert_eq!(m.to_dense().get(0, 0), 2.0);
    }

    #[test]
    fn duplicates_summed() {
        let m = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 0, 1.0)]).unwrap();
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.to_dense().get(0, 0), 2.0);
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(SparseMatrix::from_triplets(2, 2, &[(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn spmv_identity_and_swap() {
        let id = SparseMatrix::identity(3);
        let x = vec![1.0, 2.0, 3.0];
        assert_eq!(id.spmv(&x).unwrap(), x);

        let swap = SparseMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        assert_eq!(swap.spmv(&[5.0, 7.0]).unwrap(), vec![7.0, 5.0]);
    }

    #[test]
    fn spmv_dimension_mismatch() {
        let id = SparseMatrix::identity(3);
        assert!(id.spmv(&[1.0]).is_err());
    }

    #[test]
    fn csr_columns_sorted() {
        let m = SparseMatrix::from_triplets(2, 3, &[(0, 2, 1.0), (0, 0, 2.0), (1, 1, 3.0)]).unwrap();
        let row0: Vec<_> = m.row(0).collect();
        assert_eq!(row0, vec![(0, 2.0), (2, 1.0)]);
    }

    #[test]
    fn kron_small() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, 2.0)]).unwrap();
        let b = SparseMatrix::from_triplets(2, 2, &[(0, 1, 3.0), (1, 0, 4.0)]).unwrap();
        let k = SparseMatrix::kron(&a, &b);
        let d = k.to_dense();
        assert_eq!(d.get(0, 1), 3.0);
        assert_eq!(d.get(1, 0), 4.0);
        assert_eq!(d.get(2, 3), 6.0);
        assert_eq!(d.get(3, 2), 8.0);
    }

    #[test]
    fn lump_preserves_total_and_rejects_nonpositive() {
        let m = SparseMatrix::from_triplets(
            2,
            2,
            &[(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0)],
        )
        .unwrap();
        let l = lump_mass(&m).unwrap();
        assert_eq!(l.row_sums(), vec![3.0, 3.0]);

        let bad = SparseMatrix::from_triplets(1, 1, &[(0, 0, -1.0)]).unwrap();
        assert!(matches!(lump_mass(&bad), Err(LinalgError::LumpingInvalid { row: 0, .. })));
    }

    #[test]
    fn lump_diagonal_unchanged() {
        let m = SparseMatrix::from_diagonal(&[1.5, 2.5]);
        let l = lump_mass(&m).unwrap();
        assert_eq!(l.to_dense(), m.to_dense());
    }

    #[test]
    fn submatrix_extracts() {
        let m = SparseMatrix::from_triplets(
            3,
            3,
            &[(0, 0, 1.0), (1, 1, 2.0), (2, 2, 3.0), (0, 2, 5.0)],
        )
        .unwrap();
        let s = m.submatrix(&[0, 2], &[0, 2]);
        let d = s.to_dense();
        assert_eq!(d.get(0, 0), 1.0);
        assert_eq!(d.get(0, 1), 5.0);
        assert_eq!(d.get(1, 1), 3.0);
    }
}
