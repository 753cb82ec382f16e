use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use super::{Key, Ordering, Variables};
use crate::error::{Error, Result};
use crate::factors::Factor;

/// An ordered collection of factors. Insertion order fixes the row order of
/// the linearized system.
#[derive(Clone, Default)]
pub struct FactorGraph {
    factors: Vec<Arc<dyn Factor>>,
}

impl FactorGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add<F: Factor>(&mut self, factor: F) -> &mut Self {
        self.factors.push(Arc::new(factor));
        self
    }

    pub fn add_shared(&mut self, factor: Arc<dyn Factor>) -> &mut Self {
        self.factors.push(factor);
        self
    }

    pub fn remove(&mut self, index: usize) -> Arc<dyn Factor> {
        self.factors.remove(index)
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&Arc<dyn Factor>> {
        self.factors.get(index)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Arc<dyn Factor>> {
        self.factors.iter()
    }

    /// Total residual dimension, Σ factor dims.
    pub fn residual_dim(&self) -> usize {
        self.factors.iter().map(|f| f.dim()).sum()
    }

    /// Sorted unique keys referenced by any factor.
    pub fn keys(&self) -> Vec<Key> {
        let set: BTreeSet<Key> = self
            .factors
            .iter()
            .flat_map(|f| f.keys().iter().copied())
            .collect();
        set.into_iter().collect()
    }

    /// Σᵢ ρᵢ(‖Rᵢ fᵢ(x)‖²), no ½ factor.
    pub fn total_cost(&self, values: &Variables) -> Result<f64> {
        let mut total = 0.0;
        for (index, factor) in self.factors.iter().enumerate() {
            total += factor_cost(index, factor.as_ref(), values)?;
        }
        Ok(total)
    }
}

pub(crate) fn checked_error(
    index: usize,
    factor: &dyn Factor,
    values: &Variables,
) -> Result<nalgebra::DVector<f64>> {
    for k in factor.keys() {
        values.get(*k)?;
    }
    let e = factor.error(values)?;
    if e.len() != factor.dim() {
        return Err(Error::FactorDimension {
            index,
            expected: factor.dim(),
            found: e.len(),
        });
    }
    Ok(e)
}

pub(crate) fn factor_cost(index: usize, factor: &dyn Factor, values: &Variables) -> Result<f64> {
    let e = checked_error(index, factor, values)?;
    match factor.loss() {
        Some(loss) => loss.cost(&e).map_err(|_| Error::FactorDimension {
            index,
            expected: loss.dim(),
            found: e.len(),
        }),
        None => Ok(e.norm_squared()),
    }
}

/// Sorted keys of `graph`, with column ranges sized from `values`.
pub fn default_ordering(graph: &FactorGraph, values: &Variables) -> Result<Ordering> {
    Ordering::new(graph.keys(), values)
}

impl fmt::Debug for FactorGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.factors.iter()).finish()
    }
}

impl fmt::Display for FactorGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "factor graph: {} factors, {} variables, residual dim {}",
            self.len(),
            self.keys().len(),
            self.residual_dim()
        )?;
        for (i, factor) in self.factors.iter().enumerate() {
            let keys: Vec<String> = factor.keys().iter().map(|k| k.to_string()).collect();
            writeln!(f, "  [{i}] dim {} on {}", factor.dim(), keys.join(", "))?;
        }
        Ok(())
    }
}
