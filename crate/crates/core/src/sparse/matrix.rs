use nalgebra::{DMatrix, DVector};

/// Compressed sparse column matrix. Row indices within a column are strictly
/// increasing; explicit zeros are kept as structural entries.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from `(row, col, value)` entries; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; ncols + 1];
        for &(r, c, _) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            counts[c + 1] += 1;
        }
        for c in 0..ncols {
            counts[c + 1] += counts[c];
        }
        let mut next = counts.clone();
        let mut entries = vec![(0usize, 0.0f64); triplets.len()];
        for &(r, c, v) in triplets {
            entries[next[c]] = (r, v);
            next[c] += 1;
        }
        let mut col_ptr = Vec::with_capacity(ncols + 1);
        let mut row_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        col_ptr.push(0);
        for c in 0..ncols {
            let col = &mut entries[counts[c]..counts[c + 1]];
            col.sort_by_key(|e| e.0);
            for &(r, v) in col.iter() {
                if row_idx.len() > col_ptr[c] && *row_idx.last().unwrap() == r {
                    *values.last_mut().unwrap() += v;
                } else {
                    row_idx.push(r);
                    values.push(v);
                }
            }
            col_ptr.push(row_idx.len());
        }
        Self {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
        }
    }

    /// Assembles from raw parts, checking structural validity.
    pub fn from_parts(
        nrows: usize,
        ncols: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Option<Self> {
        if col_ptr.len() != ncols + 1
            || col_ptr[0] != 0
            || *col_ptr.last()? != row_idx.len()
            || row_idx.len() != values.len()
        {
            return None;
        }
        for c in 0..ncols {
            if col_ptr[c] > col_ptr[c + 1] {
                return None;
            }
            let rows = &row_idx[col_ptr[c]..col_ptr[c + 1]];
            if rows.windows(2).any(|w| w[0] >= w[1]) || rows.iter().any(|&r| r >= nrows) {
                return None;
            }
        }
        Some(Self {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            col_ptr: (0..=n).collect(),
            row_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Keeps only the nonzero entries of `m`.
    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut t = Vec::new();
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                if m[(r, c)] != 0.0 {
                    t.push((r, c, m[(r, c)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), &t)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_idx(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Row indices and values of column `c`.
    pub fn col(&self, c: usize) -> (&[usize], &[f64]) {
        let r = self.col_ptr[c]..self.col_ptr[c + 1];
        (&self.row_idx[r.clone()], &self.values[r])
    }

    /// Storage index of entry `(r, c)` if structurally present.
    pub fn position(&self, r: usize, c: usize) -> Option<usize> {
        let start = self.col_ptr[c];
        self.row_idx[start..self.col_ptr[c + 1]]
            .binary_search(&r)
            .ok()
            .map(|p| start + p)
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.position(r, c).map_or(0.0, |p| self.values[p])
    }

    pub fn diagonal(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.nrows.min(self.ncols),
            (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)),
        )
    }

    /// Same dimensions and structural pattern.
    pub fn same_pattern(&self, other: &SparseMatrix) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.col_ptr == other.col_ptr
            && self.row_idx == other.row_idx
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.nrows + 1];
        for &r in &self.row_idx {
            counts[r + 1] += 1;
        }
        for r in 0..self.nrows {
            counts[r + 1] += counts[r];
        }
        let mut next = counts.clone();
        let mut row_idx = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        // visiting columns in order keeps the new row indices sorted
        for c in 0..self.ncols {
            for p in self.col_ptr[c]..self.col_ptr[c + 1] {
                let r = self.row_idx[p];
                row_idx[next[r]] = c;
                values[next[r]] = self.values[p];
                next[r] += 1;
            }
        }
        SparseMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            col_ptr: counts,
            row_idx,
            values,
        }
    }

    /// Sparse product `self · rhs` (Gustavson, dense accumulator per column).
    pub fn mul(&self, rhs: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.ncols, rhs.nrows, "inner dimensions differ");
        let mut acc = vec![0.0; self.nrows];
        let mut mark = vec![usize::MAX; self.nrows];
        let mut col_ptr = Vec::with_capacity(rhs.ncols + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        let mut pattern = Vec::new();
        col_ptr.push(0);
        for j in 0..rhs.ncols {
            pattern.clear();
            for p in rhs.col_ptr[j]..rhs.col_ptr[j + 1] {
                let k = rhs.row_idx[p];
                let v = rhs.values[p];
                for q in self.col_ptr[k]..self.col_ptr[k + 1] {
                    let i = self.row_idx[q];
                    if mark[i] != j {
                        mark[i] = j;
                        acc[i] = 0.0;
                        pattern.push(i);
                    }
                    acc[i] += self.values[q] * v;
                }
            }
            pattern.sort_unstable();
            for &i in &pattern {
                row_idx.push(i);
                values.push(acc[i]);
            }
            col_ptr.push(row_idx.len());
        }
        SparseMatrix {
            nrows: self.nrows,
            ncols: rhs.ncols,
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = DVector::zeros(self.nrows);
        for c in 0..self.ncols {
            let xc = x[c];
            if xc == 0.0 {
                continue;
            }
            for p in self.col_ptr[c]..self.col_ptr[c + 1] {
                y[self.row_idx[p]] += self.values[p] * xc;
            }
        }
        y
    }

    /// `selfᵀ · x` without forming the transpose.
    pub fn transpose_mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.nrows);
        DVector::from_iterator(
            self.ncols,
            (0..self.ncols).map(|c| {
                (self.col_ptr[c]..self.col_ptr[c + 1])
                    .map(|p| self.values[p] * x[self.row_idx[p]])
                    .sum::<f64>()
            }),
        )
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for c in 0..self.ncols {
            for p in self.col_ptr[c]..self.col_ptr[c + 1] {
                m[(self.row_idx[p], c)] += self.values[p];
            }
        }
        m
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.nrows == self.ncols && (self.to_dense_sym_check(tol))
    }

    fn to_dense_sym_check(&self, tol: f64) -> bool {
        let t = self.transpose();
        self.same_pattern(&t)
            && self
                .values
                .iter()
                .zip(&t.values)
                .all(|(a, b)| (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0))
    }
}
