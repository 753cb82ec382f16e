//! A user-defined factor: range and bearing from a 2D pose to a point
//! landmark, with analytic Jacobians checked against central differences.
//!
//!     cargo run --example custom_factor

use fgopt::factors::numerical_jacobians;
use fgopt::{
    key, optimize, BetweenFactor, Factor, FactorGraph, Key, LossFunction, OptimizerParams, Pose2, PriorFactor,
    Variables, VectorValue,
};
use nalgebra::{DMatrix, DVector, Vector2};

#[derive(Debug)]
struct RangeBearing {
    keys: [Key; 2],
    range: f64,
    bearing: f64,
    loss: LossFunction,
}

impl RangeBearing {
    /// Landmark position in the pose frame.
    fn local_point(&self, values: &Variables) -> fgopt::Result<(Pose2, Vector2<f64>)> {
        let pose = *values.at::<Pose2>(self.keys[0])?;
        let l = values.at::<VectorValue>(self.keys[1])?.data();
        let p = pose.rotation().inverse().rotate(&(Vector2::new(l[0], l[1]) - pose.translation()));
        Ok((pose, p))
    }
}

impl Factor for RangeBearing {
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
        let (_, p) = self.local_point(values)?;
        let bearing = fgopt::liegroups::normalize_angle(p.y.atan2(p.x) - self.bearing);
        Ok(DVector::from_vec(vec![p.norm() - self.range, bearing]))
    }

    fn jacobians(&self, values: &Variables) -> fgopt::Result<Vec<DMatrix<f64>>> {
        let (pose, p) = self.local_point(values)?;
        let r2 = p.norm_squared();
        let r = r2.sqrt();
        // d(range, bearing)/dp
        let dh = DMatrix::from_row_slice(2, 2, &[p.x / r, p.y / r, -p.y / r2, p.x / r2]);
        // p = Rᵀ(l - t); a right perturbation (v, w) of the pose moves p by
        // -v - w·[-p.y, p.x]. The landmark enters through Rᵀ.
        let dp_dpose = DMatrix::from_row_slice(2, 3, &[-1.0, 0.0, p.y, 0.0, -1.0, -p.x]);
        let rt = pose.rotation().inverse().matrix();
        let dp_dl = DMatrix::from_row_slice(2, 2, &[rt[(0, 0)], rt[(0, 1)], rt[(1, 0)], rt[(1, 1)]]);
        Ok(vec![&dh * dp_dpose, &dh * dp_dl])
    }
}

fn main() -> fgopt::Result<()> {
    let odo = LossFunction::diagonal_sigmas(&[0.1, 0.1, 0.05])?;
    let obs = LossFunction::diagonal_sigmas(&[0.1, 0.02])?;
    let landmarks = [Vector2::new(4.0, 3.0), Vector2::new(8.0, -2.0)];
    let poses = [Pose2::new(0.0, 0.0, 0.0), Pose2::new(3.0, 0.0, 0.3), Pose2::new(6.0, 1.0, -0.2)];

    let mut graph = FactorGraph::new();
    let mut init = Variables::new();
    graph.add(PriorFactor::new(key('x', 0), poses[0], odo.clone()));
    for i in 0..poses.len() {
        if i > 0 {
            let m = poses[i - 1].inverse().compose(&poses[i]);
            graph.add(BetweenFactor::new(key('x', i as u64 - 1), key('x', i as u64), m, odo.clone()));
        }
        init.add(key('x', i as u64), poses[i].compose(&Pose2::new(0.3, -0.2, 0.1)));
        for (j, l) in landmarks.iter().enumerate() {
            let p = poses[i].rotation().inverse().rotate(&(l - poses[i].translation()));
            graph.add(RangeBearing {
                keys: [key('x', i as u64), key('l', j as u64)],
                range: p.norm(),
                bearing: p.y.atan2(p.x),
                loss: obs.clone(),
            });
        }
    }
    for (j, l) in landmarks.iter().enumerate() {
        init.add(key('l', j as u64), VectorValue::new(&[l.x + 0.5, l.y - 0.4]));
    }

    let probe = graph.get(2).unwrap();
    let analytic = probe.jacobians(&init)?;
    let numeric = numerical_jacobians(probe.as_ref(), &init)?;
    let gap = analytic.iter().zip(&numeric).map(|(a, n)| (a - n).amax()).fold(0.0, f64::max);
    println!("analytic vs numerical Jacobian: max difference {gap:.2e}");

    let result = optimize(&graph, &init, &OptimizerParams::default());
    println!("{} in {} iterations, final cost {:.3e}", result.status, result.iterations(), result.final_cost);
    for j in 0..landmarks.len() {
        let l = result.values.at::<VectorValue>(key('l', j as u64))?;
        println!("l{j}: ({:.6}, {:.6})", l.as_slice()[0], l.as_slice()[1]);
    }
    Ok(())
}
