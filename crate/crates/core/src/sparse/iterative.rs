//! Krylov solvers. Both stop on the true relative residual `|b - Ax| / |b|`
//! of the recurrence.

use super::{dot, norm2, CsrMatrix};
use crate::error::{Error, Result};

/// Preconditioned conjugate gradients with the inverse diagonal as
/// preconditioner. The matrix must be symmetric positive definite.
pub fn cg_jacobi(a: &CsrMatrix, b: &[f64], rel_tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = b.len();
    let inv_diag: Vec<f64> = a
        .diagonal()
        .into_iter()
        .enumerate()
        .map(|(k, d)| {
            if d > 0.0 {
                Ok(1.0 / d)
            } else {
                Err(Error::Singular(format!(
                    "CG needs a positive diagonal, found {d} at row {k}"
                )))
            }
        })
        .collect::<Result<_>>()?;
    let nb = norm2(b);
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut rel = norm2(&r) / nb;
    for iter in 1..=max_iter {
        a.matvec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(Error::NotConverged {
                method: "CG",
                iterations: iter,
                residual: rel,
            });
        }
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        rel = norm2(&r) / nb;
        if rel <= rel_tol {
            return Ok(x);
        }
        for k in 0..n {
            z[k] = r[k] * inv_diag[k];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    Err(Error::NotConverged {
        method: "CG",
        iterations: max_iter,
        residual: rel,
    })
}

/// Incomplete LU factorization with the sparsity pattern of `A`.
pub struct Ilu0 {
    // L (unit lower, strictly below the diagonal) and U share the pattern of A
    factors: CsrMatrix,
    diag_pos: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let n = a.n_rows();
        let mut factors = a.clone();
        let mut diag_pos = Vec::with_capacity(n);
        for r in 0..n {
            let (cols, _) = a.row(r);
            let k = cols.binary_search(&r).map_err(|_| {
                Error::Singular(format!("ILU(0) needs a stored diagonal, row {r} has none"))
            })?;
            diag_pos.push(a.row_offsets()[r] + k);
        }
        let offsets = factors.row_offsets.clone();
        let cols = factors.col_indices.clone();
        let vals = &mut factors.values;
        for i in 0..n {
            let row_start = offsets[i];
            let row_end = offsets[i + 1];
            for kk in row_start..row_end {
                let k = cols[kk];
                if k >= i {
                    break;
                }
                let pivot = vals[diag_pos[k]];
                if pivot == 0.0 {
                    return Err(Error::Singular(format!("ILU(0) zero pivot at row {k}")));
                }
                let lik = vals[kk] / pivot;
                vals[kk] = lik;
                // subtract lik * U(k, j) for j > k where (i, j) is in the pattern
                let mut jj = kk + 1;
                for uk in diag_pos[k] + 1..offsets[k + 1] {
                    let j = cols[uk];
                    while jj < row_end && cols[jj] < j {
                        jj += 1;
                    }
                    if jj < row_end && cols[jj] == j {
                        vals[jj] -= lik * vals[uk];
                    }
                }
            }
            if vals[diag_pos[i]] == 0.0 {
                return Err(Error::Singular(format!("ILU(0) zero pivot at row {i}")));
            }
        }
        Ok(Self { factors, diag_pos })
    }

    /// Solves `L U z = r`.
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = r.len();
        let f = &self.factors;
        for i in 0..n {
            let mut s = r[i];
            for kk in f.row_offsets[i]..self.diag_pos[i] {
                s -= f.values[kk] * z[f.col_indices[kk]];
            }
            z[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for kk in self.diag_pos[i] + 1..f.row_offsets[i + 1] {
                s -= f.values[kk] * z[f.col_indices[kk]];
            }
            z[i] = s / f.values[self.diag_pos[i]];
        }
    }
}

/// BiCGSTAB, right-preconditioned with ILU(0).
pub fn bicgstab_ilu0(a: &CsrMatrix, b: &[f64], rel_tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = b.len();
    let ilu = Ilu0::new(a)?;
    let nb = norm2(b);
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let r_hat = r.clone();
    let mut p = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut p_hat = vec![0.0; n];
    let mut s_hat = vec![0.0; n];
    let mut t = vec![0.0; n];
    let (mut rho, mut alpha, mut omega) = (1.0f64, 1.0f64, 1.0f64);
    let mut rel = 1.0;
    let breakdown = |iter: usize, rel: f64| Error::NotConverged {
        method: "BiCGSTAB",
        iterations: iter,
        residual: rel,
    };
    for iter in 1..=max_iter {
        let rho_next = dot(&r_hat, &r);
        if rho_next == 0.0 || !rho_next.is_finite() {
            return Err(breakdown(iter, rel));
        }
        let beta = (rho_next / rho) * (alpha / omega);
        rho = rho_next;
        for k in 0..n {
            p[k] = r[k] + beta * (p[k] - omega * v[k]);
        }
        ilu.apply(&p, &mut p_hat);
        a.matvec_into(&p_hat, &mut v);
        let rv = dot(&r_hat, &v);
        if rv == 0.0 {
            return Err(breakdown(iter, rel));
        }
        alpha = rho / rv;
        // r becomes s
        for k in 0..n {
            r[k] -= alpha * v[k];
        }
        let s_norm = norm2(&r) / nb;
        if s_norm <= rel_tol {
            for k in 0..n {
                x[k] += alpha * p_hat[k];
            }
            return Ok(x);
        }
        ilu.apply(&r, &mut s_hat);
        a.matvec_into(&s_hat, &mut t);
        let tt = dot(&t, &t);
        if tt == 0.0 {
            return Err(breakdown(iter, s_norm));
        }
        omega = dot(&t, &r) / tt;
        for k in 0..n {
            x[k] += alpha * p_hat[k] + omega * s_hat[k];
            r[k] -= omega * t[k];
        }
        rel = norm2(&r) / nb;
        if rel <= rel_tol {
            return Ok(x);
        }
        if omega == 0.0 {
            return Err(breakdown(iter, rel));
        }
    }
    Err(breakdown(max_iter, rel))
}
