//! The sparse linear algebra on its own: linearize a pose graph, form the
//! normal equations, compare fill with and without the block ordering,
//! solve with Cholesky and with PCG, and dump H in Matrix Market format.
//!
//!     cargo run --release --example sparse_solve [-- H.mtx]

use fgopt::graph::default_ordering;
use fgopt::io::add_auto_prior;
use fgopt::sparse::{
    amd_ordering, assemble_normal, linearize, pcg_solve, write_matrix_market, Permutation, SymbolicCholesky,
};
use fgopt::synthetic::{manhattan_2d, SyntheticConfig};

fn main() -> fgopt::Result<()> {
    let config = SyntheticConfig { poses: 500, loop_closures: 200, ..SyntheticConfig::manhattan() };
    let mut bundle = manhattan_2d(&config)?;
    add_auto_prior(&mut bundle)?;
    let ordering = default_ordering(&bundle.graph, &bundle.initials)?;
    let system = linearize(&bundle.graph, &bundle.initials, &ordering)?;
    let (h, g) = assemble_normal(&system.jacobian, &system.rhs);
    let rhs = -&g;
    println!(
        "J: {}x{} with {} nonzeros, H: {} nonzeros",
        system.jacobian.nrows(),
        system.jacobian.ncols(),
        system.jacobian.nnz(),
        h.nnz()
    );

    let natural = SymbolicCholesky::analyze(&h, Permutation::identity(h.ncols()))?;
    let blocks = ordering.block_ranges();
    let symbolic = SymbolicCholesky::analyze(&h, amd_ordering(&h, &blocks))?;
    println!("L nonzeros: natural order {}, min-degree order {}", natural.factor_nnz(), symbolic.factor_nnz());

    let factor = symbolic.factor(&h)?;
    let x = factor.solve(&rhs);
    let residual = (h.mul_vec(&x) - &rhs).norm() / rhs.norm();
    println!("cholesky: |Hx - b| / |b| = {residual:.2e}, min pivot ratio {:.2e}", factor.min_pivot_ratio());

    let pcg = pcg_solve(&h, &rhs, 1e-10, 10_000, &blocks)?;
    println!(
        "pcg: {} iterations, relative residual {:.2e}, |x_pcg - x_chol| = {:.2e}",
        pcg.iterations,
        pcg.relative_residual,
        (&pcg.x - &x).amax()
    );

    if let Some(path) = std::env::args().nth(1) {
        let file = std::fs::File::create(&path)?;
        write_matrix_market(&h, std::io::BufWriter::new(file))?;
        println!("wrote {path}");
    }
    Ok(())
}
