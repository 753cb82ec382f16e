use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use super::SparseMatrix;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct PcgSolution {
    pub x: DVector<f64>,
    pub iterations: usize,
    /// `‖Hx − g‖ / ‖g‖` at exit
    pub relative_residual: f64,
}

/// Preconditioned conjugate gradient for SPD `h`, block-Jacobi preconditioner
/// over `blocks` (scalar Jacobi when `blocks` is empty). Stops once
/// `‖Hx − g‖ ≤ tol·‖g‖`.
pub fn pcg_solve(
    h: &SparseMatrix,
    g: &DVector<f64>,
    tol: f64,
    max_iter: usize,
    blocks: &[Range<usize>],
) -> Result<PcgSolution> {
    let n = h.ncols();
    if h.nrows() != n || g.len() != n {
        return Err(Error::DimensionMismatch {
            context: "pcg".into(),
            expected: n,
            found: g.len(),
        });
    }
    let precond = BlockJacobi::new(h, blocks)?;
    let gnorm = g.norm();
    let mut x = DVector::zeros(n);
    if gnorm == 0.0 {
        return Ok(PcgSolution {
            x,
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut r = g.clone();
    let mut z = precond.apply(&r);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    let mut rel = 1.0;
    for it in 1..=max_iter {
        let hp = h.mul_vec(&p);
        let php = p.dot(&hp);
        if php.is_nan() || php <= 0.0 {
            return Err(Error::NotPositiveDefinite { column: 0, key: None });
        }
        let alpha = rz / php;
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &hp, 1.0);
        rel = r.norm() / gnorm;
        if rel <= tol {
            return Ok(PcgSolution {
                x,
                iterations: it,
                relative_residual: rel,
            });
        }
        z = precond.apply(&r);
        let rz_new = r.dot(&z);
        let beta = rz_new / rz;
        rz = rz_new;
        p = &z + beta * &p;
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        residual: rel,
    })
}

struct BlockJacobi {
    blocks: Vec<(Range<usize>, DMatrix<f64>)>,
}

impl BlockJacobi {
    fn new(h: &SparseMatrix, blocks: &[Range<usize>]) -> Result<Self> {
        let n = h.ncols();
        let ranges: Vec<Range<usize>> = if blocks.is_empty() {
            (0..n).map(|i| i..i + 1).collect()
        } else {
            blocks.to_vec()
        };
        let mut out = Vec::with_capacity(ranges.len());
        for r in ranges {
            let d = r.len();
            let sub = DMatrix::from_fn(d, d, |i, j| h.get(r.start + i, r.start + j));
            let inv = sub
                .cholesky()
                .ok_or(Error::NotPositiveDefinite {
                    column: r.start,
                    key: None,
                })?
                .inverse();
            out.push((r, inv));
        }
        Ok(Self { blocks: out })
    }

    fn apply(&self, r: &DVector<f64>) -> DVector<f64> {
        let mut z = DVector::zeros(r.len());
        for (range, inv) in &self.blocks {
            let seg = inv * r.rows(range.start, range.len());
            z.rows_mut(range.start, range.len()).copy_from(&seg);
        }
        z
    }
}
