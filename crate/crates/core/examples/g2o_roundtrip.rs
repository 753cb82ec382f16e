//! Load a g2o file, optimize it and write the result back in g2o format.
//!
//!     cargo run --release --example g2o_roundtrip -- input.g2o [output.g2o]
//!
//! Without arguments the bundled 3D square fixture is used and the result is
//! printed to stdout.

use std::io::Write;

use fgopt::io::{load_file, LoadOptions};
use fgopt::{optimize, OptimizerParams};

fn main() -> fgopt::Result<()> {
    let mut args = std::env::args().skip(1);
    let input = args
        .next()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/square_3d.g2o").to_string());
    let bundle = load_file(&input, &LoadOptions::default())?;
    eprintln!("{input}: {}", bundle.summary());
    if bundle.skipped > 0 {
        eprintln!("skipped {} unsupported records", bundle.skipped);
    }

    let result = optimize(&bundle.graph, &bundle.initials, &OptimizerParams::default());
    eprintln!(
        "{} after {} iterations, cost {:.6e} -> {:.6e}",
        result.status,
        result.iterations(),
        result.initial_cost,
        result.final_cost
    );

    match args.next() {
        Some(path) => {
            let file = std::fs::File::create(&path)?;
            bundle.save_with_values(&result.values, std::io::BufWriter::new(file))?;
            eprintln!("wrote {path}");
        }
        None => {
            let mut out = std::io::stdout().lock();
            bundle.save_with_values(&result.values, &mut out)?;
            out.flush()?;
        }
    }
    Ok(())
}
