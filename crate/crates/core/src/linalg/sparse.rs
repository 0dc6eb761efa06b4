use super::{DenseMatrix, LinalgError, Result};

/// Compressed sparse row matrix. Column indices are strictly increasing
/// within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    offsets: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from raw CSR arrays after validating the structure.
    pub fn from_csr(
        rows: usize,
        cols: usize,
        offsets: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if offsets.len() != rows + 1 || offsets[0] != 0 {
            return Err(LinalgError::InvalidSparse(format!(
                "offsets must have length {} and start at 0",
                rows + 1
            )));
        }
        if offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(LinalgError::InvalidSparse("offsets not monotone".into()));
        }
        if offsets[rows] != indices.len() || indices.len() != values.len() {
            return Err(LinalgError::InvalidSparse("final offset must equal nnz".into()));
        }
        for r in 0..rows {
            let row = &indices[offsets[r]..offsets[r + 1]];
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(LinalgError::InvalidSparse(format!(
                    "row {r}: column indices not strictly increasing"
                )));
            }
            if row.last().is_some_and(|&c| c >= cols) {
                return Err(LinalgError::InvalidSparse(format!(
                    "row {r}: column index out of range"
                )));
            }
        }
        if let Some(p) = values.iter().position(|v| !v.is_finite()) {
            let row = offsets.partition_point(|&o| o <= p) - 1;
            return Err(LinalgError::NonFinite { row, col: indices[p] });
        }
        Ok(Self {
            rows,
            cols,
            offsets,
            indices,
            values,
        })
    }

    /// Builds from `(row, col, value)` triplets; duplicate coordinates keep
    /// the last value written.
    pub fn from_triplets(rows: usize, cols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets.iter().find(|(r, c, _)| *r >= rows || *c >= cols) {
            return Err(LinalgError::InvalidSparse(format!(
                "entry ({r}, {c}) outside {rows}x{cols}"
            )));
        }
        // stable sort keeps insertion order among duplicates
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut offsets = vec![0usize; rows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().expect("duplicate follows an entry") = v;
                continue;
            }
            last = Some((r, c));
            offsets[r + 1] += 1;
            indices.push(c);
            values.push(v);
        }
        for r in 0..rows {
            offsets[r + 1] += offsets[r];
        }
        Self::from_csr(rows, cols, offsets, indices, values)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            offsets: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_dense(m: &DenseMatrix) -> Self {
        let mut offsets = Vec::with_capacity(m.rows() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        offsets.push(0);
        for i in 0..m.rows() {
            for (j, &v) in m.row(i).iter().enumerate() {
                if v != 0.0 {
                    indices.push(j);
                    values.push(v);
                }
            }
            offsets.push(indices.len());
        }
        Self {
            rows: m.rows(),
            cols: m.cols(),
            offsets,
            indices,
            values,
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.offsets[i], self.offsets[i + 1]);
        (&self.indices[s..e], &self.values[s..e])
    }

    /// Entry lookup by binary search; zero when absent.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (idx, vals) = self.row(i);
        idx.binary_search(&j).map_or(0.0, |p| vals[p])
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.row(i).0.binary_search(&j).is_ok()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            let (idx, vals) = self.row(i);
            for (&j, &v) in idx.iter().zip(vals) {
                out[(i, j)] = v;
            }
        }
        out
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.cols + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for c in 0..self.cols {
            counts[c + 1] += counts[c];
        }
        let offsets = counts.clone();
        let mut cursor = counts;
        let mut indices = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.rows {
            let (idx, vals) = self.row(i);
            for (&j, &v) in idx.iter().zip(vals) {
                let p = cursor[j];
                indices[p] = i;
                values[p] = v;
                cursor[j] += 1;
            }
        }
        SparseMatrix {
            rows: self.cols,
            cols: self.rows,
            offsets,
            indices,
            values,
        }
    }

    /// Exact structural and numerical symmetry.
    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols && *self == self.transpose()
    }

    /// `self * d`.
    pub fn spmm(&self, d: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != d.rows() {
            return Err(LinalgError::DimensionMismatch {
                op: "spmm",
                left: (self.rows, self.cols),
                right: d.shape(),
            });
        }
        let m = d.cols();
        let mut out = DenseMatrix::zeros(self.rows, m);
        for i in 0..self.rows {
            let (idx, vals) = self.row(i);
            let out_row = out.row_mut(i);
            for (&k, &a) in idx.iter().zip(vals) {
                for (o, &b) in out_row.iter_mut().zip(d.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ * d` without building the transpose.
    pub fn t_spmm(&self, d: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != d.rows() {
            return Err(LinalgError::DimensionMismatch {
                op: "t_spmm",
                left: (self.cols, self.rows),
                right: d.shape(),
            });
        }
        let m = d.cols();
        let mut out = DenseMatrix::zeros(self.cols, m);
        for i in 0..self.rows {
            let (idx, vals) = self.row(i);
            let d_row = d.row(i);
            for (&k, &a) in idx.iter().zip(vals) {
                for (o, &b) in out.row_mut(k).iter_mut().zip(d_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_spmm() {
        let m = DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]);
        assert_eq!(SparseMatrix::identity(3).spmm(&m).unwrap(), m);
    }

    #[test]
    fn half_matrix_row_sums() {
        let s = SparseMatrix::from_dense(&DenseMatrix::from_rows(&[[0.5, 0.5], [0.5, 0.5]]));
        let ones = DenseMatrix::from_rows(&[[1.0], [1.0]]);
        assert_eq!(s.spmm(&ones).unwrap(), ones);
    }

    #[test]
    fn random_sparse_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut trip = Vec::new();
        for i in 0..100 {
            for j in 0..100 {
                if rng.random::<f64>() < 0.02 {
                    trip.push((i, j, rng.random_range(-1.0..1.0)));
                }
            }
        }
        let s = SparseMatrix::from_triplets(100, 100, trip).unwrap();
        let d = DenseMatrix::from_fn(100, 7, |_, _| rng.random_range(-1.0..1.0));
        let oracle = s.to_dense().matmul(&d).unwrap();
        assert!(s.spmm(&d).unwrap().max_abs_diff(&oracle) < 1e-10);
        let oracle_t = s.to_dense().transpose().matmul(&d).unwrap();
        assert!(s.t_spmm(&d).unwrap().max_abs_diff(&oracle_t) < 1e-10);
    }

    #[test]
    fn validates_structure() {
        assert!(SparseMatrix::from_csr(2, 2, vec![0, 2, 1], vec![0, 1], vec![1.0, 1.0]).is_err());
        assert!(SparseMatrix::from_csr(1, 2, vec![0, 2], vec![1, 0], vec![1.0, 1.0]).is_err());
        assert!(SparseMatrix::from_csr(1, 2, vec![0, 2], vec![0, 1], vec![1.0, 1.0]).is_ok());
        assert!(SparseMatrix::from_triplets(2, 2, vec![(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn triplet_duplicates_collapse() {
        let s = SparseMatrix::from_triplets(2, 2, vec![(0, 1, 1.0), (0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        assert_eq!(s.nnz(), 2);
        assert!(s.is_symmetric());
    }
}
