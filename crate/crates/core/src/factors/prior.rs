use nalgebra::{DMatrix, DVector};

use super::Factor;
use crate::error::Result;
use crate::graph::{Key, Variables};
use crate::liegroups::LieGroup;
use crate::loss::LossFunction;

/// Unary factor `f(x) = log(prior⁻¹ · x)`.
#[derive(Clone, Debug)]
pub struct PriorFactor<G: LieGroup> {
    keys: [Key; 1],
    prior: G,
    loss: Option<LossFunction>,
}

impl<G: LieGroup> PriorFactor<G> {
    pub fn new(key: Key, prior: G, loss: impl Into<Option<LossFunction>>) -> Self {
        Self {
            keys: [key],
            prior,
            loss: loss.into(),
        }
    }

    pub fn key(&self) -> Key {
        self.keys[0]
    }

    pub fn prior(&self) -> &G {
        &self.prior
    }
}

impl<G: LieGroup> Factor for PriorFactor<G> {
    fn dim(&self) -> usize {
        self.prior.dim()
    }

    fn keys(&self) -> &[Key] {
        &self.keys
    }

    fn loss(&self) -> Option<&LossFunction> {
        self.loss.as_ref()
    }

    fn error(&self, values: &Variables) -> Result<DVector<f64>> {
        let x = values.at::<G>(self.keys[0])?;
        Ok(self.prior.inverse().compose(x).logmap())
    }

    /// `∂/∂δ log(prior⁻¹ · x · exp(δ)) = Jr⁻¹(e)`, the identity at `x = prior`.
    fn jacobians(&self, values: &Variables) -> Result<Vec<DMatrix<f64>>> {
        let e = self.error(values)?;
        Ok(vec![G::right_jacobian_inverse(&e)])
    }
}
