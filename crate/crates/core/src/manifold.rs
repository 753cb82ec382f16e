//! The optimizable-manifold contract.
//!
//! Every variable the optimizer touches lives on a manifold with a local
//! Euclidean chart of dimension [`Manifold::dim`]. Steps are computed in that
//! chart and pushed back onto the manifold with [`Manifold::retract`];
//! [`Manifold::local`] is the inverse map.
//!
//! For Lie groups the chart is the right-perturbation chart
//! `x ⊕ δ = x · exp(δ)`, and for plain vectors it is addition. Factors,
//! numerical differentiation and the optimizer all go through the same two
//! functions, so Jacobians and updates always agree.
//!
//! The round trip `local(x, retract(x, δ)) == δ` holds exactly for vector
//! spaces and for rotation-bearing groups whenever the rotation part of `δ`
//! is shorter than π.

use std::any::Any;
use std::fmt;

use nalgebra::DVector;

use crate::error::{Error, Result};

pub trait Manifold: Clone + fmt::Debug + Send + Sync + 'static {
    /// Tangent-space dimension.
    fn dim(&self) -> usize;

    /// `self ⊕ delta`. `delta.len()` must equal `self.dim()`; use
    /// [`retract`] for a checked call.
    fn retract(&self, delta: &[f64]) -> Self;

    /// Coordinates of `other` in the chart centered at `self`.
    fn local(&self, other: &Self) -> DVector<f64>;
}

/// Checked retraction.
pub fn retract<M: Manifold>(point: &M, delta: &[f64]) -> Result<M> {
    if delta.len() != point.dim() {
        return Err(Error::DimensionMismatch {
            context: "retract".into(),
            expected: point.dim(),
            found: delta.len(),
        });
    }
    Ok(point.retract(delta))
}

pub fn local<M: Manifold>(base: &M, other: &M) -> Result<DVector<f64>> {
    if base.dim() != other.dim() {
        return Err(Error::DimensionMismatch {
            context: "local".into(),
            expected: base.dim(),
            found: other.dim(),
        });
    }
    Ok(base.local(other))
}

/// Type-erased manifold value, as stored in [`crate::Variables`].
pub trait Value: Any + fmt::Debug + Send + Sync {
    fn dim(&self) -> usize;
    fn retract_value(&self, delta: &[f64]) -> Result<Box<dyn Value>>;
    fn local_value(&self, other: &dyn Value) -> Result<DVector<f64>>;
    fn clone_value(&self) -> Box<dyn Value>;
    fn type_name(&self) -> &'static str;
    fn as_any(&self) -> &dyn Any;
}

impl<M: Manifold> Value for M {
    fn dim(&self) -> usize {
        Manifold::dim(self)
    }

    fn retract_value(&self, delta: &[f64]) -> Result<Box<dyn Value>> {
        retract(self, delta).map(|v| Box::new(v) as Box<dyn Value>)
    }

    fn local_value(&self, other: &dyn Value) -> Result<DVector<f64>> {
        let other = other
            .as_any()
            .downcast_ref::<M>()
            .ok_or(Error::ManifoldMismatch {
                expected: short_type_name::<M>(),
                found: other.type_name(),
            })?;
        local(self, other)
    }

    fn clone_value(&self) -> Box<dyn Value> {
        Box::new(self.clone())
    }

    fn type_name(&self) -> &'static str {
        short_type_name::<M>()
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

impl Clone for Box<dyn Value> {
    fn clone(&self) -> Self {
        self.clone_value()
    }
}

pub(crate) fn short_type_name<T: ?Sized>() -> &'static str {
    let full = std::any::type_name::<T>();
    // keep generic arguments intact, strip the leading module path only
    let head = full.split('<').next().unwrap_or(full);
    match head.rfind("::") {
        Some(pos) => &full[pos + 2..],
        None => full,
    }
}

/// A point in ℝⁿ. Retraction is addition and the chart is subtraction.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorValue(pub DVector<f64>);

impl VectorValue {
    pub fn new(data: &[f64]) -> Self {
        Self(DVector::from_column_slice(data))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DVector::zeros(n))
    }

    pub fn data(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }
}

impl From<DVector<f64>> for VectorValue {
    fn from(v: DVector<f64>) -> Self {
        Self(v)
    }
}

impl Manifold for VectorValue {
    fn dim(&self) -> usize {
        self.0.len()
    }

    fn retract(&self, delta: &[f64]) -> Self {
        Self(&self.0 + DVector::from_column_slice(delta))
    }

    fn local(&self, other: &Self) -> DVector<f64> {
        &other.0 - &self.0
    }
}
