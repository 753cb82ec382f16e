use nalgebra::{DMatrix, DVector};

use super::Factor;
use crate::error::Result;
use crate::graph::{Key, Variables};
use crate::liegroups::LieGroup;
use crate::loss::LossFunction;

/// Binary factor on a relative transform. `measured` is the pose of frame 2
/// expressed in frame 1, and the error is `log(measured⁻¹ · x₁⁻¹ · x₂)`.
#[derive(Clone, Debug)]
pub struct BetweenFactor<G: LieGroup> {
    keys: [Key; 2],
    measured: G,
    loss: Option<LossFunction>,
}

impl<G: LieGroup> BetweenFactor<G> {
    pub fn new(key1: Key, key2: Key, measured: G, loss: impl Into<Option<LossFunction>>) -> Self {
        Self {
            keys: [key1, key2],
            measured,
            loss: loss.into(),
        }
    }

    pub fn measured(&self) -> &G {
        &self.measured
    }

    pub fn set_loss(&mut self, loss: Option<LossFunction>) {
        self.loss = loss;
    }
}

impl<G: LieGroup> Factor for BetweenFactor<G> {
    fn dim(&self) -> usize {
        self.measured.dim()
    }

    fn keys(&self) -> &[Key] {
        &self.keys
    }

    fn loss(&self) -> Option<&LossFunction> {
        self.loss.as_ref()
    }

    fn error(&self, values: &Variables) -> Result<DVector<f64>> {
        let x1 = values.at::<G>(self.keys[0])?;
        let x2 = values.at::<G>(self.keys[1])?;
        Ok(self
            .measured
            .inverse()
            .compose(&x1.inverse().compose(x2))
            .logmap())
    }

    // With E = exp(e):
    //   x₂ ⊕ δ  →  log(E exp(δ))           ≈ e + Jr⁻¹(e) δ
    //   x₁ ⊕ δ  →  log(E exp(-Ad(x₂⁻¹x₁) δ)) ≈ e - Jr⁻¹(e) Ad(x₂⁻¹x₁) δ
    fn jacobians(&self, values: &Variables) -> Result<Vec<DMatrix<f64>>> {
        let x1 = values.at::<G>(self.keys[0])?;
        let x2 = values.at::<G>(self.keys[1])?;
        let e = self
            .measured
            .inverse()
            .compose(&x1.inverse().compose(x2))
            .logmap();
        let jinv = G::right_jacobian_inverse(&e);
        let ad = x2.inverse().compose(x1).adjoint();
        Ok(vec![-(&jinv * ad), jinv])
    }
}
