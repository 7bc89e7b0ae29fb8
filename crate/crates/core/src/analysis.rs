//! Nodal fields, self-convergence norms and observed orders.
//!
//! With no closed-form solution available, accuracy is judged by comparing a
//! solution on mesh size `h` against the solution on `h/2` sampled at the
//! coarse nodes:
//!
//! ```text
//!   e2   = h * sqrt( sum |u_h(i,j) - u_{h/2}(2i,2j)|^2 )
//!   einf = max |u_h(i,j) - u_{h/2}(2i,2j)|
//! ```
//!
//! Both run over nodes `0 <= i, j <= N` where both fields carry a value.

use serde::Serialize;

use crate::error::{Error, Result};

/// Values on the `(N+1) x (N+1)` grid nodes, with a mask marking nodes that
/// carry no value (intersection nodes of a finite difference solution).
///
/// Masked nodes store `NaN`, so any arithmetic that reads one shows up in the
/// result.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    n: usize,
    values: Vec<f64>,
    mask: Vec<bool>,
}

impl ScalarField {
    /// All-zero field with every node valid.
    pub fn zeros(n: usize) -> Self {
        let len = (n + 1) * (n + 1);
        Self {
            n,
            values: vec![0.0; len],
            mask: vec![true; len],
        }
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut field = Self::zeros(n);
        for j in 0..=n {
            for i in 0..=n {
                field.set(i, j, f(i, j));
            }
        }
        field
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    #[inline]
    fn index(&self, i: usize, j: usize) -> usize {
        j * (self.n + 1) + i
    }

    /// Value at `(i, j)`, `None` when masked.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let k = self.index(i, j);
        self.mask[k].then(|| self.values[k])
    }

    #[inline]
    pub fn is_valid(&self, i: usize, j: usize) -> bool {
        self.mask[self.index(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let k = self.index(i, j);
        self.values[k] = value;
        self.mask[k] = true;
    }

    /// Marks `(i, j)` as carrying no value.
    pub fn mask_out(&mut self, i: usize, j: usize) {
        let k = self.index(i, j);
        self.values[k] = f64::NAN;
        self.mask[k] = false;
    }

    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|&&v| !v).count()
    }

    /// Valid nodes as `(i, j, value)` in j-major order.
    pub fn valid_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n;
        (0..=n)
            .flat_map(move |j| (0..=n).map(move |i| (i, j)))
            .filter_map(move |(i, j)| self.get(i, j).map(|v| (i, j, v)))
    }

    /// Largest `|u|` over valid nodes.
    pub fn max_abs(&self) -> f64 {
        self.valid_entries().map(|(_, _, v)| v.abs()).fold(0.0, f64::max)
    }

    /// Field multiplied pointwise by `c`; masks are kept.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for (v, &ok) in out.values.iter_mut().zip(&self.mask) {
            if ok {
                *v *= c;
            }
        }
        out
    }

    /// Samples the fine field at even-indexed nodes: coarse `(i, j)` takes
    /// fine `(2i, 2j)` together with its mask bit.
    pub fn restrict(&self) -> Result<Self> {
        if !self.n.is_multiple_of(2) {
            return Err(Error::Dimension(format!(
                "cannot restrict a field with odd N = {}",
                self.n
            )));
        }
        let n = self.n / 2;
        let mut out = Self::zeros(n);
        for j in 0..=n {
            for i in 0..=n {
                match self.get(2 * i, 2 * j) {
                    Some(v) => out.set(i, j, v),
                    None => out.mask_out(i, j),
                }
            }
        }
        Ok(out)
    }
}

/// Self-convergence errors between consecutive refinements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelfError {
    pub e2: f64,
    pub einf: f64,
}

/// Compares `coarse` (mesh size `h`) with `fine` (mesh size `h/2`) on the
/// coarse nodes where both carry a value.
pub fn self_error(coarse: &ScalarField, fine: &ScalarField) -> Result<SelfError> {
    if fine.n != 2 * coarse.n {
        return Err(Error::Dimension(format!(
            "self error needs N_fine = 2 N_coarse, got {} and {}",
            fine.n, coarse.n
        )));
    }
    let mut sum = 0.0;
    let mut einf = 0.0f64;
    for j in 0..=coarse.n {
        for i in 0..=coarse.n {
            if let (Some(a), Some(b)) = (coarse.get(i, j), fine.get(2 * i, 2 * j)) {
                let d = (a - b).abs();
                sum += d * d;
                einf = einf.max(d);
            }
        }
    }
    Ok(SelfError {
        e2: coarse.h() * sum.sqrt(),
        einf,
    })
}

/// `log2(e_h / e_{h/2})`.
pub fn observed_order(e_h: f64, e_h2: f64) -> Result<f64> {
    if !(e_h > 0.0 && e_h2 > 0.0) {
        return Err(Error::usage(format!(
            "observed order needs positive errors, got {e_h} and {e_h2}"
        )));
    }
    Ok((e_h / e_h2).log2())
}

/// Pointwise `|uE - uD|` over nodes valid in both fields, and the largest
/// difference relative to `max |uE|`.
pub fn cross_difference(ue: &ScalarField, ud: &ScalarField) -> Result<(ScalarField, f64)> {
    if ue.n != ud.n {
        return Err(Error::Dimension(format!(
            "cross difference of fields with N = {} and N = {}",
            ue.n, ud.n
        )));
    }
    let mut diff = ScalarField::zeros(ue.n);
    let mut worst = 0.0f64;
    for j in 0..=ue.n {
        for i in 0..=ue.n {
            match (ue.get(i, j), ud.get(i, j)) {
                (Some(a), Some(b)) => {
                    let d = (a - b).abs();
                    worst = worst.max(d);
                    diff.set(i, j, d);
                }
                _ => diff.mask_out(i, j),
            }
        }
    }
    let scale = ue.max_abs();
    let rel = if scale > 0.0 { worst / scale } else { worst };
    Ok((diff, rel))
}

/// One line of a convergence table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub h: f64,
    pub e2: f64,
    pub order2: Option<f64>,
    pub einf: f64,
    pub orderinf: Option<f64>,
}

/// Turns `(h, error)` pairs from successive refinements into table rows with
/// observed orders. The first row has no orders.
pub fn convergence_rows(errors: &[(f64, SelfError)]) -> Vec<ConvergenceRow> {
    let mut rows = Vec::with_capacity(errors.len());
    let mut prev: Option<SelfError> = None;
    for &(h, e) in errors {
        let order = |a: f64, b: f64| observed_order(a, b).ok();
        rows.push(ConvergenceRow {
            h,
            e2: e.e2,
            order2: prev.and_then(|p| order(p.e2, e.e2)),
            einf: e.einf,
            orderinf: prev.and_then(|p| order(p.einf, e.einf)),
        });
        prev = Some(e);
    }
    rows
}

/// Rounds to two decimals, the precision used in printed tables.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}
