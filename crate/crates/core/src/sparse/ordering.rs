use std::collections::BTreeSet;
use std::ops::Range;

use super::SparseMatrix;

/// A symmetric permutation. `perm[new] = old` and `inverse[old] = new`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    perm: Vec<usize>,
    inverse: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self {
            perm: (0..n).collect(),
            inverse: (0..n).collect(),
        }
    }

    /// From a `new → old` map. Returns `None` unless it is a bijection.
    pub fn from_vec(perm: Vec<usize>) -> Option<Self> {
        let mut inverse = vec![usize::MAX; perm.len()];
        for (new, &old) in perm.iter().enumerate() {
            if old >= perm.len() || inverse[old] != usize::MAX {
                return None;
            }
            inverse[old] = new;
        }
        Some(Self { perm, inverse })
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// Original index placed at position `new`.
    pub fn old(&self, new: usize) -> usize {
        self.perm[new]
    }

    /// Position of original index `old`.
    pub fn new_index(&self, old: usize) -> usize {
        self.inverse[old]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.perm
    }

    /// Expands a permutation of blocks into one over scalar columns, keeping
    /// each block contiguous.
    pub fn expand_blocks(&self, blocks: &[Range<usize>]) -> Permutation {
        let perm = self
            .perm
            .iter()
            .flat_map(|&b| blocks[b].clone())
            .collect::<Vec<_>>();
        Permutation::from_vec(perm).expect("blocks must partition the columns")
    }
}

/// Fill-reducing ordering over variable blocks.
///
/// Builds the block adjacency graph of the symmetric pattern `h`, runs
/// minimum degree elimination on it (degree weighted by block size, ties to
/// the lowest block index), and expands the block order to scalar columns.
/// Whole blocks are always kept together. An empty `blocks` treats every
/// column as its own block.
pub fn amd_ordering(h: &SparseMatrix, blocks: &[Range<usize>]) -> Permutation {
    let n = h.ncols();
    let owned;
    let blocks = if blocks.is_empty() {
        owned = (0..n).map(|i| i..i + 1).collect::<Vec<_>>();
        &owned[..]
    } else {
        blocks
    };
    let mut block_of = vec![0usize; n];
    for (b, r) in blocks.iter().enumerate() {
        for c in r.clone() {
            block_of[c] = b;
        }
    }
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); blocks.len()];
    for c in 0..n {
        let bc = block_of[c];
        for &r in h.col(c).0 {
            let br = block_of[r];
            if br != bc {
                adj[bc].insert(br);
                adj[br].insert(bc);
            }
        }
    }
    let weights: Vec<usize> = blocks.iter().map(|r| r.len()).collect();
    let order = minimum_degree(adj, &weights);
    Permutation::from_vec(order)
        .expect("minimum degree visits every block once")
        .expand_blocks(blocks)
}

/// Exact minimum degree on an explicit elimination graph.
fn minimum_degree(mut adj: Vec<BTreeSet<usize>>, weights: &[usize]) -> Vec<usize> {
    let n = adj.len();
    let degree = |adj: &BTreeSet<usize>| adj.iter().map(|&u| weights[u]).sum::<usize>();
    let mut deg: Vec<usize> = adj.iter().map(degree).collect();
    let mut queue: BTreeSet<(usize, usize)> = (0..n).map(|v| (deg[v], v)).collect();
    let mut order = Vec::with_capacity(n);
    while let Some((_, v)) = queue.pop_first() {
        order.push(v);
        let nbrs: Vec<usize> = std::mem::take(&mut adj[v]).into_iter().collect();
        for &u in &nbrs {
            adj[u].remove(&v);
            for &w in &nbrs {
                if w != u {
                    adj[u].insert(w);
                }
            }
            queue.remove(&(deg[u], u));
            deg[u] = degree(&adj[u]);
            queue.insert((deg[u], u));
        }
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Nonzeros of the Cholesky factor of a symmetric pattern under `perm`,
    /// counted by dense symbolic elimination.
    fn fill_count(h: &SparseMatrix, perm: &Permutation) -> usize {
        let n = h.ncols();
        let mut m = vec![vec![false; n]; n];
        for c in 0..n {
            for &r in h.col(c).0 {
                m[perm.new_index(r)][perm.new_index(c)] = true;
            }
        }
        let mut count = 0;
        for k in 0..n {
            let below: Vec<usize> = (k + 1..n).filter(|&i| m[i][k]).collect();
            count += below.len() + 1;
            for &i in &below {
                for &j in &below {
                    m[i][j] = true;
                }
            }
        }
        count
    }

    fn block_pattern(nblocks: usize, size: usize, edges: &[(usize, usize)]) -> SparseMatrix {
        let mut t = Vec::new();
        let mut add_block = |a: usize, b: usize| {
            for i in 0..size {
                for j in 0..size {
                    t.push((a * size + i, b * size + j, 1.0));
                }
            }
        };
        for b in 0..nblocks {
            add_block(b, b);
        }
        for &(a, b) in edges {
            add_block(a, b);
            add_block(b, a);
        }
        SparseMatrix::from_triplets(nblocks * size, nblocks * size, &t)
    }

    #[test]
    fn diagonal_is_identity() {
        let h = SparseMatrix::identity(6);
        assert_eq!(amd_ordering(&h, &[]), Permutation::identity(6));
        let blocks = [0..3, 3..6];
        assert_eq!(amd_ordering(&h, &blocks), Permutation::identity(6));
    }

    #[test]
    fn chain_fill_not_worse_than_natural() {
        let h = block_pattern(5, 3, &[(0, 1), (1, 2), (2, 3), (3, 4)]);
        let blocks: Vec<_> = (0..5).map(|b| b * 3..b * 3 + 3).collect();
        let p = amd_ordering(&h, &blocks);
        assert!(fill_count(&h, &p) <= fill_count(&h, &Permutation::identity(15)));
    }

    #[test]
    fn star_hub_goes_last() {
        // hub is block 6; leaves 0..6
        let edges: Vec<_> = (0..6).map(|l| (6, l)).collect();
        let h = block_pattern(7, 2, &edges);
        let blocks: Vec<_> = (0..7).map(|b| b * 2..b * 2 + 2).collect();
        let p = amd_ordering(&h, &blocks);
        assert_eq!(p.old(12), 12);
        assert_eq!(p.old(13), 13);
        let hub_first = Permutation::from_vec(vec![12, 13, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11]).unwrap();
        assert!(fill_count(&h, &p) < fill_count(&h, &hub_first));
        // with the hub numbered first it is still never eliminated before
        // the last remaining leaf, so no fill is created
        let edges: Vec<_> = (1..7).map(|l| (0, l)).collect();
        let h = block_pattern(7, 2, &edges);
        let p = amd_ordering(&h, &blocks);
        assert_eq!(fill_count(&h, &p), h.nnz() / 2 + 7);
    }

    #[test]
    fn blocks_stay_contiguous() {
        let h = block_pattern(4, 3, &[(0, 3), (3, 1), (1, 2)]);
        let blocks: Vec<_> = (0..4).map(|b| b * 3..b * 3 + 3).collect();
        let p = amd_ordering(&h, &blocks);
        for chunk in p.as_slice().chunks(3) {
            assert_eq!(chunk[0] % 3, 0);
            assert_eq!(chunk[1], chunk[0] + 1);
            assert_eq!(chunk[2], chunk[0] + 2);
        }
    }

    #[test]
    fn deterministic() {
        let h = block_pattern(6, 2, &[(0, 5), (5, 2), (2, 3), (3, 0), (1, 4)]);
        let blocks: Vec<_> = (0..6).map(|b| b * 2..b * 2 + 2).collect();
        assert_eq!(amd_ordering(&h, &blocks), amd_ordering(&h, &blocks));
    }

    #[test]
    fn permutation_validation() {
        assert!(Permutation::from_vec(vec![0, 0]).is_none());
        assert!(Permutation::from_vec(vec![0, 2]).is_none());
        let p = Permutation::from_vec(vec![2, 0, 1]).unwrap();
        assert_eq!(p.new_index(2), 0);
        assert_eq!(p.old(0), 2);
    }
}
