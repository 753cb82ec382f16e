//! Robust kernels against a bad loop closure. A 2D corridor with correct
//! loop closures plus one that is wildly wrong is solved with a plain
//! Gaussian loss, Huber and Cauchy.
//!
//!     cargo run --example robust_loss

use fgopt::{
    key, optimize, BetweenFactor, FactorGraph, LossFunction, Manifold, OptimizerParams, Pose2, PriorFactor,
    RobustKernel, Variables,
};

fn truth(i: u64) -> Pose2 {
    // Out along y = 0, back along y = 2.
    if i < 10 {
        Pose2::new(i as f64, 0.0, 0.0)
    } else {
        Pose2::new(19.0 - i as f64, 2.0, std::f64::consts::PI)
    }
}

fn build(kernel: RobustKernel) -> fgopt::Result<(FactorGraph, Variables)> {
    let base = LossFunction::diagonal_sigmas(&[0.1, 0.1, 0.02])?;
    let edge = base.clone().with_kernel(kernel);
    let mut graph = FactorGraph::new();
    let mut init = Variables::new();
    graph.add(PriorFactor::new(key('x', 0), truth(0), base));
    for i in 0..20 {
        init.add(key('x', i), truth(i).compose(&Pose2::new(0.05 * i as f64, -0.03 * i as f64, 0.01)));
        if i > 0 {
            let m = truth(i - 1).inverse().compose(&truth(i));
            graph.add(BetweenFactor::new(key('x', i - 1), key('x', i), m, edge.clone()));
        }
    }
    for (a, b) in [(2, 17), (5, 14), (8, 11)] {
        let m = truth(a).inverse().compose(&truth(b));
        graph.add(BetweenFactor::new(key('x', a), key('x', b), m, edge.clone()));
    }
    // Outlier: claims x3 and x16 are the same place.
    graph.add(BetweenFactor::new(key('x', 3), key('x', 16), Pose2::identity(), edge));
    Ok((graph, init))
}

fn main() -> fgopt::Result<()> {
    for (name, kernel) in [
        ("gaussian", RobustKernel::None),
        ("huber(1.345)", RobustKernel::huber(1.345)?),
        ("cauchy(1.0)", RobustKernel::cauchy(1.0)?),
    ] {
        let (graph, init) = build(kernel)?;
        let result = optimize(&graph, &init, &OptimizerParams::default());
        let worst = (0..20)
            .map(|i| truth(i).local(result.values.at::<Pose2>(key('x', i)).unwrap()).amax())
            .fold(0.0, f64::max);
        println!(
            "{name:>13}: {} in {:>2} iterations, cost {:.3e}, worst pose error {worst:.3}",
            result.status,
            result.iterations(),
            result.final_cost
        );
    }
    Ok(())
}
