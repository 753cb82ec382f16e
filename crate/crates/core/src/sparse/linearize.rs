use std::collections::BTreeSet;
use std::ops::Range;

use nalgebra::DVector;

use super::SparseMatrix;
use crate::error::{Error, Result};
use crate::graph::{checked_error, FactorGraph, Key, Ordering, Variables};

/// Block layout of a linearized graph: one row band per factor, one column
/// band per key, and the set of occupied `(factor, key position)` blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockSparsityPattern {
    pub row_ranges: Vec<Range<usize>>,
    pub col_ranges: Vec<Range<usize>>,
    pub blocks: BTreeSet<(usize, usize)>,
}

impl BlockSparsityPattern {
    /// Block pairs `(a, b)`, `a < b`, that share at least one factor, i.e.
    /// the off-diagonal blocks of the upper triangle of `JᵀJ`.
    pub fn normal_blocks(&self) -> BTreeSet<(usize, usize)> {
        let mut by_row: Vec<Vec<usize>> = vec![Vec::new(); self.row_ranges.len()];
        for &(f, k) in &self.blocks {
            by_row[f].push(k);
        }
        let mut out = BTreeSet::new();
        for cols in by_row {
            for &a in &cols {
                for &b in &cols {
                    if a < b {
                        out.insert((a, b));
                    }
                }
            }
        }
        out
    }
}

/// Whitened Jacobian and residual of one linearization.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub jacobian: SparseMatrix,
    /// Stacked whitened residuals `h(x₀)`; the linear model is `‖JΔx + b‖²`.
    pub rhs: DVector<f64>,
    pub pattern: BlockSparsityPattern,
}

/// Stacks the whitened Jacobian blocks of every factor, in insertion order,
/// into `J` with column layout `ordering`.
pub fn linearize(graph: &FactorGraph, values: &Variables, ordering: &Ordering) -> Result<LinearSystem> {
    let m = graph.residual_dim();
    let mut triplets = Vec::new();
    let mut rhs = DVector::zeros(m);
    let mut row_ranges = Vec::with_capacity(graph.len());
    let mut blocks = BTreeSet::new();
    let mut row = 0;
    for (index, factor) in graph.iter().enumerate() {
        let d = factor.dim();
        let e = checked_error(index, factor.as_ref(), values)?;
        let jac = factor.jacobians(values)?;
        if jac.len() != factor.keys().len() {
            return Err(Error::DimensionMismatch {
                context: format!("jacobian blocks of factor {index}"),
                expected: factor.keys().len(),
                found: jac.len(),
            });
        }
        let (jac, e) = match factor.loss() {
            Some(loss) => loss.whiten_system(jac, e).map_err(|_| Error::FactorDimension {
                index,
                expected: loss.dim(),
                found: d,
            })?,
            None => (jac, e),
        };
        for (k, block) in factor.keys().iter().zip(&jac) {
            let (pos, cols) = column_block(ordering, *k)?;
            if block.nrows() != d || block.ncols() != cols.len() {
                return Err(Error::DimensionMismatch {
                    context: format!("jacobian of factor {index} for {k}"),
                    expected: d * cols.len(),
                    found: block.nrows() * block.ncols(),
                });
            }
            blocks.insert((index, pos));
            for c in 0..block.ncols() {
                for r in 0..d {
                    triplets.push((row + r, cols.start + c, block[(r, c)]));
                }
            }
        }
        rhs.rows_mut(row, d).copy_from(&e);
        row_ranges.push(row..row + d);
        row += d;
    }
    Ok(LinearSystem {
        jacobian: SparseMatrix::from_triplets(m, ordering.dim(), &triplets),
        rhs,
        pattern: BlockSparsityPattern {
            row_ranges,
            col_ranges: ordering.block_ranges(),
            blocks,
        },
    })
}

fn column_block(ordering: &Ordering, key: Key) -> Result<(usize, Range<usize>)> {
    let pos = ordering.position(key).ok_or(Error::MissingKey(key))?;
    Ok((pos, ordering.block_range(pos)))
}

/// `H = JᵀJ` (full symmetric storage) and `g = Jᵀb`.
pub fn assemble_normal(jacobian: &SparseMatrix, rhs: &DVector<f64>) -> (SparseMatrix, DVector<f64>) {
    let jt = jacobian.transpose();
    let h = jt.mul(jacobian);
    let g = jacobian.transpose_mul_vec(rhs);
    (h, g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factors::PriorFactor;
    use crate::graph::key;
    use crate::liegroups::Pose2;
    use crate::loss::LossFunction;
    use crate::manifold::VectorValue;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn vector_prior_is_identity() {
        let mut g = FactorGraph::new();
        g.add(PriorFactor::new(key('p', 0), VectorValue::new(&[1.0, 2.0]), None));
        let mut v = Variables::new();
        v.add(key('p', 0), VectorValue::new(&[4.0, 0.0]));
        let o = Ordering::new(vec![key('p', 0)], &v).unwrap();
        let sys = linearize(&g, &v, &o).unwrap();
        assert_eq!(sys.jacobian.to_dense(), nalgebra::DMatrix::identity(2, 2));
        assert_eq!(sys.rhs.as_slice(), &[3.0, -2.0]);
        let (h, grad) = assemble_normal(&sys.jacobian, &sys.rhs);
        assert_eq!(h.to_dense(), nalgebra::DMatrix::identity(2, 2));
        assert_eq!(grad, sys.rhs);
    }

    #[test]
    fn whitening_scales_rows() {
        let x = Pose2::new(0.3, -0.2, 0.4);
        let mut v = Variables::new();
        v.add(key('x', 1), x);
        let o = Ordering::new(vec![key('x', 1)], &v).unwrap();
        let build = |loss: Option<LossFunction>| {
            let mut g = FactorGraph::new();
            g.add(PriorFactor::new(key('x', 1), Pose2::identity(), loss));
            linearize(&g, &v, &o).unwrap()
        };
        let unit = build(None);
        let weighted = build(Some(LossFunction::diagonal_sigmas(&[1.0, 1.0, 0.1]).unwrap()));
        let (a, b) = (unit.jacobian.to_dense(), weighted.jacobian.to_dense());
        for c in 0..3 {
            assert_eq!(b[(0, c)], a[(0, c)]);
            assert_eq!(b[(1, c)], a[(1, c)]);
            assert!((b[(2, c)] - 10.0 * a[(2, c)]).abs() < 1e-12);
        }
        assert!((weighted.rhs[2] - 10.0 * unit.rhs[2]).abs() < 1e-12);
    }

    #[test]
    fn normal_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let mut t = Vec::new();
        for r in 0..30 {
            for c in 0..12 {
                if rng.random::<f64>() < 0.25 {
                    t.push((r, c, rng.random_range(-2.0..2.0)));
                }
            }
        }
        let j = SparseMatrix::from_triplets(30, 12, &t);
        let b = DVector::from_fn(30, |_, _| rng.random_range(-1.0..1.0));
        let (h, g) = assemble_normal(&j, &b);
        let jd = j.to_dense();
        assert!((h.to_dense() - jd.transpose() * &jd).amax() < 1e-12);
        assert!((g - jd.transpose() * &b).amax() < 1e-12);
        assert!(h.is_symmetric(0.0));
    }

    #[test]
    fn missing_key_in_ordering() {
        let mut g = FactorGraph::new();
        g.add(PriorFactor::new(key('p', 0), VectorValue::zeros(1), None));
        let mut v = Variables::new();
        v.add(key('p', 0), VectorValue::zeros(1));
        let o = Ordering::with_dims(vec![], &[]).unwrap();
        assert!(matches!(linearize(&g, &v, &o), Err(Error::MissingKey(_))));
    }
}
