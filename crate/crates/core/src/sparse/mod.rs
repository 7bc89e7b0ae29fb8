//! Compressed sparse row matrices and the linear solvers shared by both
//! discretizations.

mod direct;
mod iterative;
mod market;

pub use direct::DirectLu;
pub use iterative::{bicgstab_ilu0, cg_jacobi, Ilu0};
pub use market::write_matrix_market;

use crate::error::{Error, Result};
use crate::mesh::DofMap;

/// Square or rectangular sparse matrix in CSR form.
///
/// Column indices are strictly increasing within each row and no explicit zeros
/// are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are summed,
    /// and entries that sum to exactly zero are dropped.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut counts = vec![0usize; n_rows + 1];
        for &(r, c, _) in triplets {
            if r >= n_rows || c >= n_cols {
                return Err(Error::Dimension(format!(
                    "entry ({r}, {c}) outside a {n_rows}x{n_cols} matrix"
                )));
            }
            counts[r + 1] += 1;
        }
        for r in 0..n_rows {
            counts[r + 1] += counts[r];
        }
        // bucket by row, then sort and merge each row
        let mut cursor = counts.clone();
        let mut bucket = vec![(0usize, 0.0f64); triplets.len()];
        for &(r, c, v) in triplets {
            bucket[cursor[r]] = (c, v);
            cursor[r] += 1;
        }
        let mut row_offsets = Vec::with_capacity(n_rows + 1);
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_offsets.push(0);
        for r in 0..n_rows {
            let row = &mut bucket[counts[r]..counts[r + 1]];
            row.sort_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut sum = 0.0;
                while k < row.len() && row[k].0 == c {
                    sum += row[k].1;
                    k += 1;
                }
                if sum != 0.0 {
                    col_indices.push(c);
                    values.push(sum);
                }
            }
            row_offsets.push(col_indices.len());
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Assembles a matrix from rows given as `(col, value)` lists, in row order.
    pub fn from_rows<I>(n_cols: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = Vec<(usize, f64)>>,
    {
        let mut triplets = Vec::new();
        let mut n_rows = 0;
        for (r, row) in rows.into_iter().enumerate() {
            triplets.extend(row.into_iter().map(|(c, v)| (r, c, v)));
            n_rows = r + 1;
        }
        Self::from_triplets(n_rows, n_cols, &triplets)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_offsets: vec![0; n_rows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `r`.
    #[inline]
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_offsets[r]..self.row_offsets[r + 1];
        (&self.col_indices[span.clone()], &self.values[span])
    }

    /// Entry `(r, c)`, zero when not stored.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).map(|k| vals[k]).unwrap_or(0.0)
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_cols {
            return Err(Error::Dimension(format!(
                "matvec with a {}x{} matrix and a vector of length {}",
                self.n_rows,
                self.n_cols,
                x.len()
            )));
        }
        let mut y = vec![0.0; self.n_rows];
        self.matvec_into(x, &mut y);
        Ok(y)
    }

    /// `y = A x` without dimension checks beyond debug assertions.
    #[inline]
    pub(crate) fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(y.len(), self.n_rows);
        for (r, out) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            *out = cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum();
        }
    }

    pub fn transpose(&self) -> Self {
        let mut triplets = Vec::with_capacity(self.nnz());
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            triplets.extend(cols.iter().zip(vals).map(|(&c, &v)| (c, r, v)));
        }
        Self::from_triplets(self.n_cols, self.n_rows, &triplets)
            .expect("transposed indices are in range")
    }

    /// `max |A - A^T|` over all entries.
    pub fn max_asymmetry(&self) -> f64 {
        let t = self.transpose();
        let mut worst = 0.0f64;
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - t.get(r, c)).abs());
            }
            let (cols, vals) = t.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(r, c)).abs());
            }
        }
        worst
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols)).map(|r| self.get(r, r)).collect()
    }

    /// Largest absolute value in each row.
    pub fn row_max_abs(&self) -> Vec<f64> {
        (0..self.n_rows)
            .map(|r| self.row(r).1.iter().fold(0.0f64, |m, v| m.max(v.abs())))
            .collect()
    }

    /// Returns `diag(scale) * A`.
    pub fn scale_rows(&self, scale: &[f64]) -> Result<Self> {
        if scale.len() != self.n_rows {
            return Err(Error::Dimension(format!(
                "row scaling of length {} for {} rows",
                scale.len(),
                self.n_rows
            )));
        }
        let mut out = self.clone();
        for (r, &s) in scale.iter().enumerate() {
            let span = out.row_offsets[r]..out.row_offsets[r + 1];
            out.values[span].iter_mut().for_each(|v| *v *= s);
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (r, row) in dense.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                row[c] = v;
            }
        }
        dense
    }

    /// Infinity norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.n_rows)
            .map(|r| self.row(r).1.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// A discretized problem: matrix, right-hand side, and the node numbering of
/// the unknowns.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub dofs: DofMap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverMethod {
    /// Sparse LU with partial pivoting and a fill-reducing column ordering.
    Direct,
    /// Conjugate gradients with a diagonal preconditioner (SPD systems only).
    Cg,
    /// BiCGSTAB right-preconditioned with ILU(0).
    Bicgstab,
}

impl std::str::FromStr for SolverMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Self::Direct),
            "cg" => Ok(Self::Cg),
            "bicgstab" => Ok(Self::Bicgstab),
            other => Err(Error::usage(format!(
                "unknown solver '{other}' (expected direct, cg or bicgstab)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub method: SolverMethod,
    /// Relative residual target `|Ax - b| / |b|`.
    pub rel_tol: f64,
    pub max_iter: usize,
    /// Divide every row and its right-hand side by the row's largest weight
    /// before solving. Ignored by CG, which needs the symmetric matrix.
    pub equilibrate: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: SolverMethod::Direct,
            rel_tol: 1e-12,
            max_iter: 10_000,
            equilibrate: true,
        }
    }
}

impl SolverConfig {
    pub fn with_method(method: SolverMethod) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::usage(format!(
                "solver tolerance must lie in (0, 1), got {}",
                self.rel_tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::usage("max_iter must be at least 1"));
        }
        Ok(())
    }
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `|Ax - b|_2 / |b|_2`, or `|Ax|_2` when `b = 0`.
pub fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> Result<f64> {
    let ax = a.matvec(x)?;
    let r: Vec<f64> = ax.iter().zip(b).map(|(p, q)| p - q).collect();
    let nb = norm2(b);
    Ok(if nb > 0.0 { norm2(&r) / nb } else { norm2(&r) })
}

/// Solves `A x = b` with the configured method.
pub fn factor_solve(a: &CsrMatrix, b: &[f64], cfg: &SolverConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if a.n_rows() != a.n_cols() {
        return Err(Error::Dimension(format!(
            "cannot solve with a non-square {}x{} matrix",
            a.n_rows(),
            a.n_cols()
        )));
    }
    if b.len() != a.n_rows() {
        return Err(Error::Dimension(format!(
            "right-hand side of length {} for {} rows",
            b.len(),
            a.n_rows()
        )));
    }
    if b.iter().all(|&v| v == 0.0) {
        return Ok(vec![0.0; b.len()]);
    }

    let scaled;
    let (a, b): (&CsrMatrix, Vec<f64>) = if cfg.equilibrate && cfg.method != SolverMethod::Cg {
        let scale: Vec<f64> = a
            .row_max_abs()
            .into_iter()
            .enumerate()
            .map(|(r, m)| {
                if m > 0.0 {
                    Ok(1.0 / m)
                } else {
                    Err(Error::Singular(format!("row {r} is empty")))
                }
            })
            .collect::<Result<_>>()?;
        scaled = a.scale_rows(&scale)?;
        (&scaled, b.iter().zip(&scale).map(|(v, s)| v * s).collect())
    } else {
        (a, b.to_vec())
    };

    match cfg.method {
        SolverMethod::Direct => DirectLu::factor(a)?.solve_refined(a, &b, cfg.rel_tol),
        SolverMethod::Cg => cg_jacobi(a, &b, cfg.rel_tol, cfg.max_iter),
        SolverMethod::Bicgstab => bicgstab_ilu0(a, &b, cfg.rel_tol, cfg.max_iter),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_5pt(k: usize) -> CsrMatrix {
        let idx = |i: usize, j: usize| j * k + i;
        let mut t = Vec::new();
        for j in 0..k {
            for i in 0..k {
                let r = idx(i, j);
                t.push((r, r, 4.0));
                if i > 0 {
                    t.push((r, idx(i - 1, j), -1.0));
                }
                if i + 1 < k {
                    t.push((r, idx(i + 1, j), -1.0));
                }
                if j > 0 {
                    t.push((r, idx(i, j - 1), -1.0));
                }
                if j + 1 < k {
                    t.push((r, idx(i, j + 1), -1.0));
                }
            }
        }
        CsrMatrix::from_triplets(k * k, k * k, &t).unwrap()
    }

    #[test]
    fn triplets_merge_sort_and_drop_zeros() {
        let a = CsrMatrix::from_triplets(
            2,
            3,
            &[(0, 2, 1.0), (0, 0, 2.0), (0, 2, 3.0), (1, 1, 1.0), (1, 1, -1.0)],
        )
        .unwrap();
        assert_eq!(a.row(0), (&[0usize, 2][..], &[2.0, 4.0][..]));
        assert_eq!(a.row(1).0.len(), 0);
        assert_eq!(a.nnz(), 2);
        assert!(CsrMatrix::from_triplets(2, 2, &[(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn matvec_trivial_cases() {
        let x = vec![1.0, -2.0, 3.5];
        assert_eq!(CsrMatrix::identity(3).matvec(&x).unwrap(), x);
        assert_eq!(CsrMatrix::zeros(3, 3).matvec(&x).unwrap(), vec![0.0; 3]);
        assert!(CsrMatrix::identity(2).matvec(&x).is_err());
    }

    #[test]
    fn diagonal_solve_divides() {
        let a = CsrMatrix::from_triplets(3, 3, &[(0, 0, 2.0), (1, 1, 4.0), (2, 2, -8.0)]).unwrap();
        let b = vec![1.0, 2.0, 4.0];
        for equilibrate in [false, true] {
            let cfg = SolverConfig {
                equilibrate,
                ..SolverConfig::default()
            };
            let x = factor_solve(&a, &b, &cfg).unwrap();
            assert_eq!(x, vec![0.5, 0.5, -0.5]);
        }
    }

    #[test]
    fn laplacian_recovers_ones_with_every_method() {
        let a = laplacian_5pt(20);
        let ones = vec![1.0; a.n_rows()];
        let b = a.matvec(&ones).unwrap();
        for method in [SolverMethod::Direct, SolverMethod::Cg, SolverMethod::Bicgstab] {
            let x = factor_solve(&a, &b, &SolverConfig::with_method(method)).unwrap();
            let err = x.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
            assert!(err < 1e-10, "{method:?}: {err}");
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)])
            .unwrap();
        let err = factor_solve(&a, &[1.0, 2.0], &SolverConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Singular(_) | Error::NotConverged { .. }), "{err}");
        let empty_row = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0)]).unwrap();
        assert!(matches!(
            factor_solve(&empty_row, &[1.0, 1.0], &SolverConfig::default()),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn config_validation() {
        let mut cfg = SolverConfig::default();
        cfg.rel_tol = 0.0;
        assert!(cfg.validate().is_err());
        cfg.rel_tol = 1e-8;
        cfg.max_iter = 0;
        assert!(cfg.validate().is_err());
        assert_eq!("cg".parse::<SolverMethod>().unwrap(), SolverMethod::Cg);
        assert!("lu".parse::<SolverMethod>().is_err());
    }

    #[test]
    fn cg_reports_non_convergence() {
        let a = laplacian_5pt(30);
        let b = vec![1.0; a.n_rows()];
        let cfg = SolverConfig {
            method: SolverMethod::Cg,
            max_iter: 3,
            ..SolverConfig::default()
        };
        match factor_solve(&a, &b, &cfg) {
            Err(Error::NotConverged { iterations, residual, .. }) => {
                assert_eq!(iterations, 3);
                assert!(residual > 1e-12);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
