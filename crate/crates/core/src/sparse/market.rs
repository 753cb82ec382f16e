use std::io::Write;

use super::SparseMatrix;

/// Writes `m` in MatrixMarket coordinate format (1-based, general real).
pub fn write_matrix_market<W: Write>(m: &SparseMatrix, mut out: W) -> std::io::Result<()> {
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", m.nrows(), m.ncols(), m.nnz())?;
    for c in 0..m.ncols() {
        let (rows, vals) = m.col(c);
        for (r, v) in rows.iter().zip(vals) {
            writeln!(out, "{} {} {}", r + 1, c + 1, v)?;
        }
    }
    Ok(())
}
