use std::collections::BTreeMap;

use nalgebra::DVector;

use super::{Key, Ordering};
use crate::error::{Error, Result};
use crate::manifold::{short_type_name, Manifold, Value};

/// Current estimate of every variable, keyed and iterated in key order.
#[derive(Clone, Debug, Default)]
pub struct Variables {
    values: BTreeMap<Key, Box<dyn Value>>,
}

impl Variables {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or replaces the value at `key`.
    pub fn add<M: Manifold>(&mut self, key: Key, value: M) {
        self.values.insert(key, Box::new(value));
    }

    pub fn add_boxed(&mut self, key: Key, value: Box<dyn Value>) {
        self.values.insert(key, value);
    }

    /// Typed access.
    pub fn at<M: Manifold>(&self, key: Key) -> Result<&M> {
        let value = self.get(key)?;
        value.as_any().downcast_ref::<M>().ok_or(Error::TypeMismatch {
            key,
            expected: short_type_name::<M>(),
            found: value.type_name(),
        })
    }

    pub fn get(&self, key: Key) -> Result<&dyn Value> {
        self.values
            .get(&key)
            .map(|v| v.as_ref())
            .ok_or(Error::MissingKey(key))
    }

    pub fn contains(&self, key: Key) -> bool {
        self.values.contains_key(&key)
    }

    pub fn remove(&mut self, key: Key) -> Option<Box<dyn Value>> {
        self.values.remove(&key)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = Key> + '_ {
        self.values.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Key, &dyn Value)> {
        self.values.iter().map(|(k, v)| (*k, v.as_ref()))
    }

    /// Sum of tangent dimensions.
    pub fn dim(&self) -> usize {
        self.values.values().map(|v| v.dim()).sum()
    }

    /// Applies `x ⊕ δ` to every variable named by `ordering`, reading each
    /// slice of `delta` from the ordering's column range. Variables outside
    /// the ordering are copied unchanged.
    pub fn retract(&self, ordering: &Ordering, delta: &DVector<f64>) -> Result<Variables> {
        if delta.len() != ordering.dim() {
            return Err(Error::DimensionMismatch {
                context: "variables retract".into(),
                expected: ordering.dim(),
                found: delta.len(),
            });
        }
        let mut out = self.clone();
        for (key, range) in ordering.iter() {
            let value = self.get(key)?;
            let updated = value.retract_value(&delta.as_slice()[range])?;
            out.values.insert(key, updated);
        }
        Ok(out)
    }

    /// Stacks `local(self[k], other[k])` over the ordering.
    pub fn local(&self, ordering: &Ordering, other: &Variables) -> Result<DVector<f64>> {
        let mut out = DVector::zeros(ordering.dim());
        for (key, range) in ordering.iter() {
            let d = self.get(key)?.local_value(other.get(key)?)?;
            out.rows_mut(range.start, range.len()).copy_from(&d);
        }
        Ok(out)
    }
}
