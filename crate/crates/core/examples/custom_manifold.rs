//! A user-defined manifold: unit directions on the sphere S², with a
//! two-dimensional tangent chart. The direction is estimated from noisy
//! unit-vector observations using a factor that relies on the default
//! numerical Jacobians.
//!
//!     cargo run --example custom_manifold

use fgopt::{key, optimize, Factor, FactorGraph, Key, LossFunction, Manifold, OptimizerParams, Variables};
use nalgebra::{DVector, Vector3};

#[derive(Clone, Debug)]
struct UnitVector(Vector3<f64>);

impl UnitVector {
    fn new(v: Vector3<f64>) -> Self {
        Self(v.normalize())
    }

    /// Orthonormal basis of the tangent plane, a fixed function of the point.
    fn basis(&self) -> (Vector3<f64>, Vector3<f64>) {
        let p = self.0;
        let helper = if p.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        let b1 = p.cross(&helper).normalize();
        (b1, p.cross(&b1))
    }
}

impl Manifold for UnitVector {
    fn dim(&self) -> usize {
        2
    }

    fn retract(&self, delta: &[f64]) -> Self {
        let (b1, b2) = self.basis();
        Self::new(self.0 + b1 * delta[0] + b2 * delta[1])
    }

    // Inverse of `retract` on the hemisphere around `self`.
    fn local(&self, other: &Self) -> DVector<f64> {
        let (b1, b2) = self.basis();
        let s = self.0.dot(&other.0);
        DVector::from_vec(vec![b1.dot(&other.0) / s, b2.dot(&other.0) / s])
    }
}

/// Observation of a direction, error in the chart at the estimate.
#[derive(Debug)]
struct DirectionFactor {
    keys: [Key; 1],
    measured: UnitVector,
    loss: LossFunction,
}

impl Factor for DirectionFactor {
    fn dim(&self) -> usize {
        2
    }

    fn keys(&self) -> &[Key] {
        &self.keys
    }

    fn loss(&self) -> Option<&LossFunction> {
        Some(&self.loss)
    }

    fn error(&self, values: &Variables) -> fgopt::Result<DVector<f64>> {
        let x = values.at::<UnitVector>(self.keys[0])?;
        Ok(x.local(&self.measured))
    }
}

fn main() -> fgopt::Result<()> {
    let truth = Vector3::new(1.0, 2.0, 2.0).normalize();
    let loss = LossFunction::isotropic(2, 0.05)?;
    let mut graph = FactorGraph::new();
    let offsets = [[0.03, -0.01, 0.02], [-0.02, 0.04, -0.01], [0.01, 0.0, -0.03], [-0.02, -0.03, 0.02]];
    for o in offsets {
        graph.add(DirectionFactor {
            keys: [key('d', 0)],
            measured: UnitVector::new(truth + Vector3::from(o)),
            loss: loss.clone(),
        });
    }

    let mut init = Variables::new();
    init.add(key('d', 0), UnitVector::new(Vector3::new(0.0, 0.0, 1.0)));
    let result = optimize(&graph, &init, &OptimizerParams::default());
    let d = result.values.at::<UnitVector>(key('d', 0))?;
    println!("{} after {} iterations", result.status, result.iterations());
    println!("estimate {:.5?}, norm {:.15}", d.0.as_slice(), d.0.norm());
    println!("angle to truth {:.3e} rad", d.0.angle(&truth));
    Ok(())
}
