//! Brute-force references for testing. None of this shares code with the
//! sparse assembly in [`crate::fem`] or [`crate::fdm`].

use std::f64::consts::PI;

use crate::analysis::ScalarField;
use crate::error::{Error, Result};
use crate::fem::FemProblem;

/// Largest `N` accepted by [`dense_assembly`].
pub const DENSE_MAX_N: usize = 32;

/// Gauss-Legendre nodes and weights on `[0, 1]`.
fn gauss_legendre_unit(order: usize) -> Result<Vec<(f64, f64)>> {
    // nodes and weights on [-1, 1]
    let rule: Vec<(f64, f64)> = match order {
        3 => {
            let t = (3.0f64 / 5.0).sqrt();
            vec![(-t, 5.0 / 9.0), (0.0, 8.0 / 9.0), (t, 5.0 / 9.0)]
        }
        4 => {
            let a = (3.0 / 7.0 - 2.0 / 7.0 * (6.0f64 / 5.0).sqrt()).sqrt();
            let b = (3.0 / 7.0 + 2.0 / 7.0 * (6.0f64 / 5.0).sqrt()).sqrt();
            let wa = (18.0 + 30.0f64.sqrt()) / 36.0;
            let wb = (18.0 - 30.0f64.sqrt()) / 36.0;
            vec![(-b, wb), (-a, wa), (a, wa), (b, wb)]
        }
        5 => {
            let a = (5.0 - 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 3.0;
            let b = (5.0 + 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 3.0;
            let wa = (322.0 + 13.0 * 70.0f64.sqrt()) / 900.0;
            let wb = (322.0 - 13.0 * 70.0f64.sqrt()) / 900.0;
            vec![(-b, wb), (-a, wa), (0.0, 128.0 / 225.0), (a, wa), (b, wb)]
        }
        _ => {
            return Err(Error::usage(format!(
                "quadrature order must be 3, 4 or 5, got {order}"
            )))
        }
    };
    Ok(rule.into_iter().map(|(t, w)| (0.5 * (t + 1.0), 0.5 * w)).collect())
}

/// 1D hat function centred on node `k` of a grid with spacing `h`, and its
/// derivative, at the point `(cell + offset) h` with `0 < offset < 1`.
fn hat(k: usize, h: f64, cell: usize, offset: f64) -> (f64, f64) {
    // s = t / h - k, formed without rounding the global coordinate
    let s = match cell as i64 - k as i64 {
        0 => offset,
        -1 => offset - 1.0,
        _ => return (0.0, 0.0),
    };
    if s < 0.0 {
        (1.0 + s, 1.0 / h)
    } else {
        (1.0 - s, -1.0 / h)
    }
}

/// Dense stiffness matrix and load vector of the finite element problem,
/// integrated by tensor Gauss quadrature on every cell.
///
/// Unknown `p` is node `(i, j)` with `p = (j-1)(N-1) + (i-1)`, the same
/// numbering as the sparse assembly. The coefficient is sampled at the
/// quadrature points.
pub fn dense_assembly(
    problem: &FemProblem<'_>,
    quad_order: usize,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let n = problem.grid.n();
    if n > DENSE_MAX_N {
        return Err(Error::usage(format!(
            "dense assembly is limited to N <= {DENSE_MAX_N}, got {n}"
        )));
    }
    if problem.coeff.min_value() <= 0.0 {
        return Err(Error::usage("coefficient must be positive"));
    }
    let rule = gauss_legendre_unit(quad_order)?;
    let h = 1.0 / n as f64;
    let dim = (n - 1) * (n - 1);
    let index = |i: usize, j: usize| (j - 1) * (n - 1) + (i - 1);
    let mut a = vec![vec![Neumaier::default(); dim]; dim];
    let mut b = vec![Neumaier::default(); dim];

    for cj in 0..n {
        for ci in 0..n {
            for &(sx, wx) in &rule {
                for &(sy, wy) in &rule {
                    let x = (ci as f64 + sx) * h;
                    let y = (cj as f64 + sy) * h;
                    let w = wx * wy * h * h;
                    let coef = problem.coeff.sample(x, y)?;
                    let f = (problem.source)(x, y);
                    // every interior basis function that is nonzero here
                    let mut active = Vec::with_capacity(4);
                    for j in 1..n {
                        let (phy, dphy) = hat(j, h, cj, sy);
                        if phy == 0.0 && dphy == 0.0 {
                            continue;
                        }
                        for i in 1..n {
                            let (phx, dphx) = hat(i, h, ci, sx);
                            if phx == 0.0 && dphx == 0.0 {
                                continue;
                            }
                            active.push((index(i, j), phx * phy, dphx * phy, phx * dphy));
                        }
                    }
                    for &(p, phi_p, gx_p, gy_p) in &active {
                        b[p].add(w * f * phi_p);
                        for &(q, _, gx_q, gy_q) in &active {
                            a[p][q].add(w * coef * (gx_p * gx_q + gy_p * gy_q));
                        }
                    }
                }
            }
        }
    }
    let a = a.iter().map(|row| row.iter().map(Neumaier::value).collect()).collect();
    let b = b.iter().map(Neumaier::value).collect();
    Ok((a, b))
}

/// Compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Gaussian elimination with partial pivoting on a dense copy.
pub fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    if a.len() != n || a.iter().any(|row| row.len() != n) {
        return Err(Error::Dimension("dense solve needs a square matrix".into()));
    }
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut x = b.to_vec();
    for k in 0..n {
        let pivot = (k..n)
            .max_by(|&r, &s| m[r][k].abs().total_cmp(&m[s][k].abs()))
            .expect("non-empty pivot range");
        if m[pivot][k] == 0.0 {
            return Err(Error::Singular(format!("zero pivot in column {k}")));
        }
        m.swap(k, pivot);
        x.swap(k, pivot);
        let (top, bottom) = m.split_at_mut(k + 1);
        let row_k = &top[k];
        for (r, row) in bottom.iter_mut().enumerate() {
            let factor = row[k] / row_k[k];
            if factor == 0.0 {
                continue;
            }
            for c in k..n {
                row[c] -= factor * row_k[c];
            }
            x[k + 1 + r] -= factor * x[k];
        }
    }
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|c| m[k][c] * x[c]).sum();
        x[k] = (x[k] - s) / m[k][k];
    }
    Ok(x)
}

/// Truncation of the double sine series for `-lap u = 1` on the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FourierConfig {
    /// Largest odd mode kept in each direction.
    pub modes: usize,
}

impl Default for FourierConfig {
    fn default() -> Self {
        Self { modes: 2001 }
    }
}

impl FourierConfig {
    pub fn new(modes: usize) -> Result<Self> {
        if modes < 3 || modes.is_multiple_of(2) {
            return Err(Error::usage(format!(
                "Fourier cutoff must be odd and >= 3, got {modes}"
            )));
        }
        Ok(Self { modes })
    }
}

#[inline]
fn series_coefficient(p: usize, q: usize) -> f64 {
    let (p, q) = (p as f64, q as f64);
    16.0 / (PI.powi(4) * p * q * (p * p + q * q))
}

/// Solution of `-lap u = 1`, `u = 0` on the boundary, at `(x, y)`:
/// `u = sum over odd p, q of 16 sin(p pi x) sin(q pi y) / (pi^4 p q (p^2 + q^2))`.
pub fn fourier_poisson(x: f64, y: f64, cfg: &FourierConfig) -> Result<f64> {
    if !((0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y)) {
        return Err(Error::usage(format!("({x}, {y}) is outside the unit square")));
    }
    let sx: Vec<f64> = (1..=cfg.modes).step_by(2).map(|p| (p as f64 * PI * x).sin()).collect();
    let sy: Vec<f64> = (1..=cfg.modes).step_by(2).map(|q| (q as f64 * PI * y).sin()).collect();
    let mut total = 0.0;
    for (a, &s_p) in sx.iter().enumerate() {
        let mut inner = 0.0;
        for (b, &s_q) in sy.iter().enumerate() {
            inner += series_coefficient(2 * a + 1, 2 * b + 1) * s_q;
        }
        total += s_p * inner;
    }
    Ok(total)
}

/// [`fourier_poisson`] at every node of the `N x N` grid, using separable
/// sums so the cost is `O(M^2 N + M N^2)`.
pub fn fourier_poisson_grid(n: usize, cfg: &FourierConfig) -> ScalarField {
    let modes: Vec<usize> = (1..=cfg.modes).step_by(2).collect();
    let h = 1.0 / n as f64;
    // sines[k][i] = sin(p_k pi x_i)
    let sines: Vec<Vec<f64>> = modes
        .iter()
        .map(|&p| (0..=n).map(|i| (p as f64 * PI * i as f64 * h).sin()).collect())
        .collect();
    // partial[a][j] = sum_b c(p_a, p_b) sin(p_b pi y_j)
    let mut partial = vec![vec![0.0; n + 1]; modes.len()];
    for (a, &p) in modes.iter().enumerate() {
        for (b, &q) in modes.iter().enumerate() {
            let c = series_coefficient(p, q);
            for (out, s) in partial[a].iter_mut().zip(&sines[b]) {
                *out += c * s;
            }
        }
    }
    let mut field = ScalarField::zeros(n);
    for j in 1..n {
        for i in 1..n {
            let v: f64 = (0..modes.len()).map(|a| sines[a][i] * partial[a][j]).sum();
            field.set(i, j, v);
        }
    }
    field
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rules_integrate_polynomials() {
        for order in 3..=5 {
            let rule = gauss_legendre_unit(order).unwrap();
            let total: f64 = rule.iter().map(|&(_, w)| w).sum();
            assert!((total - 1.0).abs() < 1e-15);
            let quartic: f64 = rule.iter().map(|&(t, w)| w * t.powi(4)).sum();
            assert!((quartic - 0.2).abs() < 1e-15, "order {order}");
        }
        assert!(gauss_legendre_unit(2).is_err());
    }

    #[test]
    fn dense_solve_small_system() {
        let a = vec![vec![0.0, 2.0, 1.0], vec![1.0, 1.0, 0.0], vec![3.0, 0.0, 1.0]];
        let x_true = [1.0, -2.0, 0.5];
        let b: Vec<f64> = a.iter().map(|r| r.iter().zip(&x_true).map(|(p, q)| p * q).sum()).collect();
        let x = dense_solve(&a, &b).unwrap();
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-14);
        }
        assert!(dense_solve(&[vec![1.0, 1.0], vec![1.0, 1.0]], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn fourier_boundary_and_symmetry() {
        let cfg = FourierConfig::new(201).unwrap();
        assert!(fourier_poisson(0.0, 0.3, &cfg).unwrap().abs() < 1e-15);
        assert!(fourier_poisson(0.4, 1.0, &cfg).unwrap().abs() < 1e-12);
        let a = fourier_poisson(0.2, 0.35, &cfg).unwrap();
        let b = fourier_poisson(0.8, 0.35, &cfg).unwrap();
        assert!((a - b).abs() < 1e-14);
        assert!(fourier_poisson(1.5, 0.3, &cfg).is_err());
        assert!(FourierConfig::new(4).is_err());
        assert!(FourierConfig::new(1).is_err());
    }
}
