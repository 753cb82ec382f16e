//! Five fixed LM iterations on benchmark-sized pose graphs.
//!
//! Generates the 2D grid-world (3500 poses, 5453 edges) and 3D torus (5000
//! poses, 9048 edges) problems, anchors them, and runs Levenberg-Marquardt for
//! exactly five accepted iterations, printing the cost after each one.
//!
//!     cargo run --release --example benchmark_protocol

use std::time::Instant;

use fgopt::io::add_auto_prior;
use fgopt::synthetic::{manhattan_2d, torus_3d, SyntheticConfig};
use fgopt::{optimize, OptimizerParams};

fn run(name: &str, mut bundle: fgopt::io::DatasetBundle) -> fgopt::Result<()> {
    add_auto_prior(&mut bundle)?;
    println!("{name}: {}", bundle.summary());
    let start = Instant::now();
    let result = optimize(&bundle.graph, &bundle.initials, &OptimizerParams::fixed(5));
    let elapsed = start.elapsed().as_secs_f64();
    println!("  initial cost {:.6e}", result.initial_cost);
    for r in result.records.iter() {
        let tag = if r.accepted { "accepted" } else { "rejected" };
        println!(
            "  iter {} lambda {:.1e} cost {:.6e} ({tag})",
            r.iteration,
            r.lambda.unwrap_or(0.0),
            r.cost_after
        );
    }
    println!("  {} in {elapsed:.2} s", result.status);
    Ok(())
}

fn main() -> fgopt::Result<()> {
    run("grid 2D", manhattan_2d(&SyntheticConfig::manhattan())?)?;
    run("torus 3D", torus_3d(&SyntheticConfig::torus())?)?;
    Ok(())
}
