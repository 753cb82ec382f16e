//! Residual terms of the objective.
//!
//! A [`Factor`] maps the variables it touches to an error vector `f(x)` of
//! fixed length [`Factor::dim`] and supplies one Jacobian block per key,
//! taken with respect to the right-perturbation chart of that variable.
//! Jacobians are returned unwhitened; the attached [`LossFunction`] is
//! applied during linearization.
//!
//! Factors that only implement [`Factor::error`] inherit central-difference
//! Jacobians from [`numerical_jacobians`].

mod between;
mod prior;

use std::any::Any;
use std::fmt;

use nalgebra::{DMatrix, DVector};

pub use between::BetweenFactor;
pub use prior::PriorFactor;

use crate::error::Result;
use crate::graph::{Key, Variables};
use crate::loss::LossFunction;

/// Absolute step of the central-difference Jacobian. Tangent coordinates are
/// already locally normalized, so the step is not scaled by the value.
pub const NUMERICAL_STEP: f64 = 1e-5;

pub trait Factor: Any + Send + Sync + fmt::Debug {
    /// Length of the error vector.
    fn dim(&self) -> usize;

    fn keys(&self) -> &[Key];

    fn loss(&self) -> Option<&LossFunction> {
        None
    }

    fn error(&self, values: &Variables) -> Result<DVector<f64>>;

    /// One `dim × dim(x_j)` block per key, in key order.
    fn jacobians(&self, values: &Variables) -> Result<Vec<DMatrix<f64>>> {
        numerical_jacobians(self, values)
    }
}

impl dyn Factor {
    pub fn downcast_ref<T: Factor>(&self) -> Option<&T> {
        (self as &dyn Any).downcast_ref::<T>()
    }
}

/// Central differences through the manifold chart:
/// column `k` of block `j` is `(f(x_j ⊕ h e_k) - f(x_j ⊕ -h e_k)) / 2h`.
pub fn numerical_jacobians<F: Factor + ?Sized>(
    factor: &F,
    values: &Variables,
) -> Result<Vec<DMatrix<f64>>> {
    let h = NUMERICAL_STEP;
    let mut local = Variables::new();
    for k in factor.keys() {
        local.add_boxed(*k, values.get(*k)?.clone_value());
    }
    let m = factor.dim();
    let mut blocks = Vec::with_capacity(factor.keys().len());
    for k in factor.keys() {
        let original = values.get(*k)?;
        let n = original.dim();
        let mut block = DMatrix::zeros(m, n);
        let mut step = vec![0.0; n];
        for col in 0..n {
            step[col] = h;
            local.add_boxed(*k, original.retract_value(&step)?);
            let plus = factor.error(&local)?;
            step[col] = -h;
            local.add_boxed(*k, original.retract_value(&step)?);
            let minus = factor.error(&local)?;
            step[col] = 0.0;
            block.set_column(col, &((plus - minus) / (2.0 * h)));
        }
        local.add_boxed(*k, original.clone_value());
        blocks.push(block);
    }
    Ok(blocks)
}
