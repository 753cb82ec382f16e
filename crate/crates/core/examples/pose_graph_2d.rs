//! The five-pose loop: a prior on x1, odometry around a 5 m square and one
//! loop closure from x5 back to x2, solved with Levenberg-Marquardt.
//!
//!     cargo run --example pose_graph_2d

use std::f64::consts::FRAC_PI_2;

use fgopt::{key, optimize, BetweenFactor, FactorGraph, LossFunction, OptimizerParams, Pose2, PriorFactor, Variables};

fn main() -> fgopt::Result<()> {
    let noise = LossFunction::diagonal_sigmas(&[1.0, 1.0, 0.1])?;

    let mut graph = FactorGraph::new();
    graph.add(PriorFactor::new(key('x', 1), Pose2::identity(), noise.clone()));
    graph.add(BetweenFactor::new(key('x', 1), key('x', 2), Pose2::new(5.0, 0.0, 0.0), noise.clone()));
    graph.add(BetweenFactor::new(key('x', 2), key('x', 3), Pose2::new(5.0, 0.0, -FRAC_PI_2), noise.clone()));
    graph.add(BetweenFactor::new(key('x', 3), key('x', 4), Pose2::new(5.0, 0.0, -FRAC_PI_2), noise.clone()));
    graph.add(BetweenFactor::new(key('x', 4), key('x', 5), Pose2::new(5.0, 0.0, -FRAC_PI_2), noise.clone()));
    // loop closure
    graph.add(BetweenFactor::new(key('x', 5), key('x', 2), Pose2::new(5.0, 0.0, -FRAC_PI_2), noise));

    let mut init = Variables::new();
    init.add(key('x', 1), Pose2::new(0.2, -0.3, 0.2));
    init.add(key('x', 2), Pose2::new(5.1, 0.3, -0.1));
    init.add(key('x', 3), Pose2::new(9.9, -0.1, -FRAC_PI_2 - 0.2));
    init.add(key('x', 4), Pose2::new(10.2, -5.0, -3.04));
    init.add(key('x', 5), Pose2::new(5.1, -5.1, FRAC_PI_2 - 0.1));

    println!("{graph}");
    let result = optimize(&graph, &init, &OptimizerParams::default());
    for r in &result.records {
        println!(
            "iter {:>2}  cost {:.6e} -> {:.6e}  lambda {:.0e}  {}",
            r.iteration,
            r.cost_before,
            r.cost_after,
            r.lambda.unwrap_or(0.0),
            if r.accepted { "accepted" } else { "rejected" }
        );
    }
    println!("{} with final cost {:.3e}", result.status, result.final_cost);
    for i in 1..=5 {
        let p = result.values.at::<Pose2>(key('x', i))?;
        println!("x{i}: ({:9.6}, {:9.6}, {:9.6})", p.x(), p.y(), p.theta());
    }
    Ok(())
}
