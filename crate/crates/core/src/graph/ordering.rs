use std::collections::HashMap;
use std::ops::Range;

use super::{Key, Variables};
use crate::error::{Error, Result};

/// Column layout of the linear system: each key owns a contiguous range of
/// tangent columns, in the order given.
#[derive(Clone, Debug, PartialEq)]
pub struct Ordering {
    keys: Vec<Key>,
    offsets: Vec<usize>,
    index: HashMap<Key, usize>,
}

impl Ordering {
    /// Column ranges are sized by the tangent dimension of each key in `values`.
    pub fn new(keys: Vec<Key>, values: &Variables) -> Result<Self> {
        let dims = keys
            .iter()
            .map(|k| values.get(*k).map(|v| v.dim()))
            .collect::<Result<Vec<_>>>()?;
        Self::with_dims(keys, &dims)
    }

    pub fn with_dims(keys: Vec<Key>, dims: &[usize]) -> Result<Self> {
        if keys.len() != dims.len() {
            return Err(Error::DimensionMismatch {
                context: "ordering".into(),
                expected: keys.len(),
                found: dims.len(),
            });
        }
        let mut offsets = Vec::with_capacity(keys.len() + 1);
        let mut index = HashMap::with_capacity(keys.len());
        let mut acc = 0;
        for (i, (k, d)) in keys.iter().zip(dims).enumerate() {
            if index.insert(*k, i).is_some() {
                return Err(Error::InvalidParameter(format!("key {k} appears twice in ordering")));
            }
            offsets.push(acc);
            acc += d;
        }
        offsets.push(acc);
        Ok(Self {
            keys,
            offsets,
            index,
        })
    }

    pub fn keys(&self) -> &[Key] {
        &self.keys
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Total number of scalar columns.
    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn position(&self, key: Key) -> Option<usize> {
        self.index.get(&key).copied()
    }

    pub fn range(&self, key: Key) -> Option<Range<usize>> {
        self.position(key).map(|i| self.block_range(i))
    }

    pub fn block_range(&self, block: usize) -> Range<usize> {
        self.offsets[block]..self.offsets[block + 1]
    }

    pub fn block_ranges(&self) -> Vec<Range<usize>> {
        (0..self.keys.len()).map(|i| self.block_range(i)).collect()
    }

    /// Key owning scalar column `col`.
    pub fn key_of_column(&self, col: usize) -> Option<Key> {
        if col >= self.dim() {
            return None;
        }
        let block = self.offsets.partition_point(|&o| o <= col) - 1;
        Some(self.keys[block])
    }

    pub fn iter(&self) -> impl Iterator<Item = (Key, Range<usize>)> + '_ {
        self.keys
            .iter()
            .enumerate()
            .map(move |(i, k)| (*k, self.block_range(i)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::key;

    #[test]
    fn offsets_and_lookup() {
        let o = Ordering::with_dims(vec![key('x', 1), key('x', 2), key('l', 0)], &[3, 3, 2]).unwrap();
        assert_eq!(o.dim(), 8);
        assert_eq!(o.range(key('x', 2)), Some(3..6));
        assert_eq!(o.key_of_column(0), Some(key('x', 1)));
        assert_eq!(o.key_of_column(5), Some(key('x', 2)));
        assert_eq!(o.key_of_column(7), Some(key('l', 0)));
        assert_eq!(o.key_of_column(8), None);
        assert!(Ordering::with_dims(vec![key('x', 1), key('x', 1)], &[1, 1]).is_err());
    }
}
