//! Up-looking sparse Cholesky with a reusable symbolic analysis.
//!
//! For a symmetric `H` and permutation `P`, computes lower-triangular `L` with
//! `L Lᵀ = P H Pᵀ`. The upper factor is `R = Lᵀ`, so `RᵀR = P H Pᵀ`.

use nalgebra::DVector;

use super::{Permutation, SparseMatrix};
use crate::error::{Error, Result};

/// A pivot counts as non-positive when it falls below this fraction of the
/// original diagonal entry.
pub const PIVOT_TOLERANCE: f64 = 1e-10;

/// Elimination tree and factor layout for one sparsity pattern. Numeric
/// factorizations of any matrix with that exact pattern can reuse it.
#[derive(Clone, Debug)]
pub struct SymbolicCholesky {
    n: usize,
    perm: Permutation,
    /// pattern of the analyzed matrix, kept to validate reuse
    a_col_ptr: Vec<usize>,
    a_row_idx: Vec<usize>,
    /// upper triangle of P H Pᵀ: column pointers and row indices
    c_col_ptr: Vec<usize>,
    c_row_idx: Vec<usize>,
    /// storage index in C for each entry of H (None for the dropped triangle)
    a_to_c: Vec<Option<usize>>,
    parent: Vec<Option<usize>>,
    l_col_ptr: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    l: SparseMatrix,
    perm: Permutation,
    /// smallest `L_kk² / C_kk`, a cheap conditioning diagnostic
    min_pivot_ratio: f64,
}

impl SymbolicCholesky {
    pub fn analyze(h: &SparseMatrix, perm: Permutation) -> Result<Self> {
        let n = h.ncols();
        if h.nrows() != n || perm.len() != n {
            return Err(Error::DimensionMismatch {
                context: "cholesky analysis".into(),
                expected: n,
                found: if h.nrows() != n { h.nrows() } else { perm.len() },
            });
        }

        // upper triangle of the permuted matrix
        let mut counts = vec![0usize; n + 1];
        for c in 0..n {
            for &r in h.col(c).0 {
                if r <= c {
                    let (i, j) = (perm.new_index(r), perm.new_index(c));
                    counts[i.max(j) + 1] += 1;
                }
            }
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let c_col_ptr = counts.clone();
        let mut next = counts;
        let mut c_row_idx = vec![0usize; c_col_ptr[n]];
        let mut a_to_c = vec![None; h.nnz()];
        for c in 0..n {
            let start = h.col_ptr()[c];
            for (off, &r) in h.col(c).0.iter().enumerate() {
                if r <= c {
                    let (i, j) = (perm.new_index(r), perm.new_index(c));
                    let col = i.max(j);
                    c_row_idx[next[col]] = i.min(j);
                    a_to_c[start + off] = Some(next[col]);
                    next[col] += 1;
                }
            }
        }

        let parent = etree(n, &c_col_ptr, &c_row_idx);

        // column counts of L from the row patterns
        let mut col_count = vec![1usize; n];
        let mut stack = vec![0usize; n];
        let mut mark = vec![usize::MAX; n];
        for k in 0..n {
            let top = ereach(&c_col_ptr, &c_row_idx, k, &parent, &mut stack, &mut mark);
            for &i in &stack[top..] {
                col_count[i] += 1;
            }
        }
        let mut l_col_ptr = vec![0usize; n + 1];
        for j in 0..n {
            l_col_ptr[j + 1] = l_col_ptr[j] + col_count[j];
        }

        Ok(Self {
            n,
            perm,
            a_col_ptr: h.col_ptr().to_vec(),
            a_row_idx: h.row_idx().to_vec(),
            c_col_ptr,
            c_row_idx,
            a_to_c,
            parent,
            l_col_ptr,
        })
    }

    pub fn permutation(&self) -> &Permutation {
        &self.perm
    }

    /// Number of stored entries of `L`.
    pub fn factor_nnz(&self) -> usize {
        self.l_col_ptr[self.n]
    }

    pub fn matches(&self, h: &SparseMatrix) -> bool {
        h.ncols() == self.n && h.col_ptr() == self.a_col_ptr && h.row_idx() == self.a_row_idx
    }

    /// Numeric factorization of `h`, which must have the analyzed pattern.
    pub fn factor(&self, h: &SparseMatrix) -> Result<CholeskyFactor> {
        if !self.matches(h) {
            return Err(Error::PatternMismatch);
        }
        let n = self.n;
        let mut c_val = vec![0.0; self.c_row_idx.len()];
        for (p, dst) in self.a_to_c.iter().enumerate() {
            if let Some(q) = dst {
                c_val[*q] = h.values()[p];
            }
        }

        let nnz = self.factor_nnz();
        let mut l_row = vec![0usize; nnz];
        let mut l_val = vec![0.0; nnz];
        let mut fill: Vec<usize> = self.l_col_ptr[..n].to_vec();
        let mut x = vec![0.0; n];
        let mut stack = vec![0usize; n];
        let mut mark = vec![usize::MAX; n];
        let mut min_ratio = f64::INFINITY;

        for k in 0..n {
            let top = ereach(&self.c_col_ptr, &self.c_row_idx, k, &self.parent, &mut stack, &mut mark);
            x[k] = 0.0;
            for p in self.c_col_ptr[k]..self.c_col_ptr[k + 1] {
                x[self.c_row_idx[p]] = c_val[p];
            }
            let diag = x[k];
            let mut d = diag;
            x[k] = 0.0;
            for &i in &stack[top..] {
                let lki = x[i] / l_val[self.l_col_ptr[i]];
                x[i] = 0.0;
                for p in self.l_col_ptr[i] + 1..fill[i] {
                    x[l_row[p]] -= l_val[p] * lki;
                }
                d -= lki * lki;
                let p = fill[i];
                fill[i] += 1;
                l_row[p] = k;
                l_val[p] = lki;
            }
            if !d.is_finite() || d <= PIVOT_TOLERANCE * diag.abs() {
                return Err(Error::NotPositiveDefinite {
                    column: self.perm.old(k),
                    key: None,
                });
            }
            if diag > 0.0 {
                min_ratio = min_ratio.min(d / diag);
            }
            let p = fill[k];
            fill[k] += 1;
            l_row[p] = k;
            l_val[p] = d.sqrt();
        }

        let l = SparseMatrix::from_parts(n, n, self.l_col_ptr.clone(), l_row, l_val)
            .expect("factor layout comes from the symbolic analysis");
        Ok(CholeskyFactor {
            l,
            perm: self.perm.clone(),
            min_pivot_ratio: min_ratio,
        })
    }
}

/// Elimination tree of a matrix given by its upper triangle.
fn etree(n: usize, col_ptr: &[usize], row_idx: &[usize]) -> Vec<Option<usize>> {
    let mut parent = vec![None; n];
    let mut ancestor: Vec<Option<usize>> = vec![None; n];
    for k in 0..n {
        for &r in &row_idx[col_ptr[k]..col_ptr[k + 1]] {
            let mut i = Some(r);
            while let Some(node) = i {
                if node >= k {
                    break;
                }
                let next = ancestor[node];
                ancestor[node] = Some(k);
                if next.is_none() {
                    parent[node] = Some(k);
                }
                i = next;
            }
        }
    }
    parent
}

/// Nonzero pattern of row `k` of `L` (excluding the diagonal), written to
/// `stack[top..]` in topological order. `mark` uses `k` as the visit stamp.
fn ereach(
    col_ptr: &[usize],
    row_idx: &[usize],
    k: usize,
    parent: &[Option<usize>],
    stack: &mut [usize],
    mark: &mut [usize],
) -> usize {
    let n = stack.len();
    let mut top = n;
    mark[k] = k;
    for &r in &row_idx[col_ptr[k]..col_ptr[k + 1]] {
        if r > k {
            continue;
        }
        let mut len = 0;
        let mut i = r;
        while mark[i] != k {
            stack[len] = i;
            len += 1;
            mark[i] = k;
            match parent[i] {
                Some(p) => i = p,
                None => break,
            }
        }
        while len > 0 {
            len -= 1;
            top -= 1;
            stack[top] = stack[len];
        }
    }
    top
}

impl CholeskyFactor {
    /// Lower factor `L` of the permuted matrix.
    pub fn l(&self) -> &SparseMatrix {
        &self.l
    }

    /// Upper factor `R = Lᵀ`.
    pub fn r(&self) -> SparseMatrix {
        self.l.transpose()
    }

    pub fn permutation(&self) -> &Permutation {
        &self.perm
    }

    pub fn min_pivot_ratio(&self) -> f64 {
        self.min_pivot_ratio
    }

    /// Solves `H x = g` by `Rᵀ y = P g`, `R x' = y`, `x = Pᵀ x'`.
    pub fn solve(&self, g: &DVector<f64>) -> DVector<f64> {
        let n = self.l.ncols();
        assert_eq!(g.len(), n, "right-hand side length");
        let mut y: Vec<f64> = (0..n).map(|i| g[self.perm.old(i)]).collect();
        // forward: L y = P g
        for j in 0..n {
            let (rows, vals) = self.l.col(j);
            y[j] /= vals[0];
            let yj = y[j];
            for (r, v) in rows.iter().zip(vals).skip(1) {
                y[*r] -= v * yj;
            }
        }
        // backward: Lᵀ x' = y
        for j in (0..n).rev() {
            let (rows, vals) = self.l.col(j);
            let mut s = y[j];
            for (r, v) in rows.iter().zip(vals).skip(1) {
                s -= v * y[*r];
            }
            y[j] = s / vals[0];
        }
        let mut x = DVector::zeros(n);
        for (i, v) in y.into_iter().enumerate() {
            x[self.perm.old(i)] = v;
        }
        x
    }
}

/// Analyze and factor in one go.
pub fn sparse_cholesky(h: &SparseMatrix, perm: Permutation) -> Result<CholeskyFactor> {
    SymbolicCholesky::analyze(h, perm)?.factor(h)
}

/// Back-substitution through a computed factor.
pub fn solve_normal(factor: &CholeskyFactor, g: &DVector<f64>) -> DVector<f64> {
    factor.solve(g)
}
