//! A 3D pose graph: a robot drives around the edges of a 2 m cube face,
//! climbs, and drives the top face, with loop closures between the layers.
//! Gauss-Newton and Levenberg-Marquardt are run from the same noisy start.
//!
//!     cargo run --example se3_pose_graph

use std::f64::consts::FRAC_PI_2;

use fgopt::{
    key, optimize, BetweenFactor, FactorGraph, LossFunction, OptimizerParams, Pose3, PriorFactor, Rot3, Variables,
};
use nalgebra::{DMatrix, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn yaw(t: f64) -> Rot3 {
    Rot3::exp(&Vector3::new(0.0, 0.0, t))
}

fn main() -> fgopt::Result<()> {
    // Ground truth: two squares of side 2 at heights 0 and 2, heading along each side.
    let mut truth = Vec::new();
    for level in 0..2 {
        for i in 0..4 {
            let corners = [(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0)];
            let (x, y) = corners[i];
            truth.push(Pose3::new(yaw(i as f64 * FRAC_PI_2), Vector3::new(x, y, 2.0 * level as f64)));
        }
    }

    // Translation sigma 5 cm, rotation sigma 0.02 rad. Information is given in
    // tangent order (translation, rotation).
    let info = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![400.0, 400.0, 400.0, 2500.0, 2500.0, 2500.0]));
    let noise = LossFunction::from_information(&info)?;

    let mut graph = FactorGraph::new();
    graph.add(PriorFactor::new(key('x', 0), truth[0], noise.clone()));
    let mut edges: Vec<(usize, usize)> = (0..7).map(|i| (i, i + 1)).collect();
    edges.extend([(3, 0), (7, 4), (0, 4), (1, 5), (2, 6), (3, 7)]);
    for &(a, b) in &edges {
        let measured = truth[a].inverse().compose(&truth[b]);
        graph.add(BetweenFactor::new(key('x', a as u64), key('x', b as u64), measured, noise.clone()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = Normal::new(0.0, 0.15).unwrap();
    let mut init = Variables::new();
    for (i, p) in truth.iter().enumerate() {
        let d: Vec<f64> = (0..6).map(|_| n.sample(&mut rng)).collect();
        init.add(key('x', i as u64), fgopt::Manifold::retract(p, &d));
    }

    for (name, params) in [
        ("Gauss-Newton", OptimizerParams::gauss_newton()),
        ("Levenberg-Marquardt", OptimizerParams::levenberg_marquardt()),
    ] {
        let result = optimize(&graph, &init, &params);
        let worst = truth
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let p = result.values.at::<Pose3>(key('x', i as u64)).unwrap();
                fgopt::Manifold::local(t, p).amax()
            })
            .fold(0.0, f64::max);
        println!(
            "{name}: {} after {} iterations, cost {:.3e} -> {:.3e}, max pose error {worst:.2e}",
            result.status,
            result.iterations(),
            result.initial_cost,
            result.final_cost
        );
    }
    Ok(())
}
