use std::io::Write;

use super::CsrMatrix;

/// Writes `a` in Matrix Market coordinate format (1-based indices, values in
/// full-precision scientific notation).
pub fn write_matrix_market<W: Write>(a: &CsrMatrix, mut out: W) -> std::io::Result<()> {
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", a.n_rows(), a.n_cols(), a.nnz())?;
    for r in 0..a.n_rows() {
        let (cols, vals) = a.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            writeln!(out, "{} {} {:.17e}", r + 1, c + 1, v)?;
        }
    }
    Ok(())
}
