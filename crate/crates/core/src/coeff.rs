//! Piecewise-constant coefficient fields over the `m x m` interface cells.
//!
//! Cell `(r, c)` covers `(c/m, (c+1)/m) x (r/m, (r+1)/m)`: rows count upward
//! from the bottom edge, columns rightward from the left edge. The same
//! bottom-to-top order is used in memory and in the JSON file format.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    m: usize,
    // row-major, row 0 at the bottom
    values: Vec<f64>,
}

/// On-disk representation of a coefficient field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoefficientFile {
    pub m: usize,
    pub rows_bottom_to_top: Vec<Vec<f64>>,
}

fn check_positive(v: f64, what: &str) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::usage(format!("{what} must be a positive finite number, got {v}")))
    }
}

impl CoefficientField {
    /// Alternating field: cell `(r, c)` gets `a_even` when `r + c` is even,
    /// so the bottom-left cell is `a_even`.
    pub fn checkerboard(m: usize, a_even: f64, a_odd: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::usage(format!("m must be >= 2, got {m}")));
        }
        check_positive(a_even, "a_even")?;
        check_positive(a_odd, "a_odd")?;
        let values = (0..m * m)
            .map(|k| if (k / m + k % m).is_multiple_of(2) { a_even } else { a_odd })
            .collect();
        Ok(Self { m, values })
    }

    pub fn uniform(m: usize, value: f64) -> Result<Self> {
        Self::checkerboard(m, value, value)
    }

    /// Builds a field from rows listed bottom to top.
    pub fn from_matrix(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        if m < 2 {
            return Err(Error::usage(format!(
                "coefficient matrix must be at least 2x2, got {m} rows"
            )));
        }
        let mut values = Vec::with_capacity(m * m);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::usage(format!(
                    "coefficient matrix is not square: row {r} has {} entries, expected {m}",
                    row.len()
                )));
            }
            for (c, &v) in row.iter().enumerate() {
                check_positive(v, &format!("coefficient ({r}, {c})"))?;
                values.push(v);
            }
        }
        Ok(Self { m, values })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Value on cell `(row, col)`, row 0 at the bottom.
    #[inline]
    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.m + col]
    }

    /// Rows bottom to top.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.m).map(<[f64]>::to_vec).collect()
    }

    /// Value of `a` at a point strictly inside a cell.
    ///
    /// Points on an interface line or on the outer boundary are rejected: the
    /// coefficient is not defined there.
    pub fn sample(&self, x: f64, y: f64) -> Result<f64> {
        let col = self.locate(x, "x")?;
        let row = self.locate(y, "y")?;
        Ok(self.value(row, col))
    }

    fn locate(&self, t: f64, axis: &str) -> Result<usize> {
        let s = t * self.m as f64;
        if !(s > 0.0 && s < self.m as f64) || (s - s.round()).abs() < 1e-9 {
            return Err(Error::usage(format!(
                "{axis} = {t} is not strictly inside an interface cell (m = {})",
                self.m
            )));
        }
        Ok(s.floor() as usize)
    }

    /// Every cell multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        check_positive(factor, "scale factor")?;
        Ok(Self {
            m: self.m,
            values: self.values.iter().map(|v| v * factor).collect(),
        })
    }

    /// Reflection across the diagonal `x = y`.
    pub fn transposed(&self) -> Self {
        let m = self.m;
        let values = (0..m * m).map(|k| self.value(k % m, k / m)).collect();
        Self { m, values }
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::MIN, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::MAX, f64::min)
    }

    pub fn to_file(&self) -> CoefficientFile {
        CoefficientFile {
            m: self.m,
            rows_bottom_to_top: self.rows(),
        }
    }

    pub fn from_file(file: &CoefficientFile) -> Result<Self> {
        if file.rows_bottom_to_top.len() != file.m {
            return Err(Error::Format(format!(
                "m = {} but {} rows were given",
                file.m,
                file.rows_bottom_to_top.len()
            )));
        }
        Self::from_matrix(&file.rows_bottom_to_top).map_err(|e| match e {
            Error::Usage(msg) => Error::Format(msg),
            other => other,
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: CoefficientFile =
            serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        Self::from_file(&file)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("coefficient file serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::from_json_str(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json_string())
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }
}
