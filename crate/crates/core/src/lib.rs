//! Finite element and finite difference solvers for the 2D elliptic
//! cross-interface problem
//!
//! ```text
//!   -div(a grad u) = f   in (0,1)^2 minus the interface lines,
//!   [u] = 0, [a du/dn] = 0 across every interface line,
//!   u = 0 on the boundary,
//! ```
//!
//! where `a` is positive and constant on each cell of an `m x m` partition of
//! the unit square. Both discretizations run on a uniform grid of `N` intervals
//! per side with `N` a multiple of `m`, so every interface line is a grid line.
//!
//! The crate is organised bottom-up:
//!
//! - [`mesh`]: grid geometry, node classification, and unknown numbering.
//! - [`coeff`]: piecewise-constant coefficient fields.
//! - [`sparse`]: CSR storage and the linear solvers.
//! - [`fem`]: bilinear finite elements on the grid cells.
//! - [`fdm`]: 5-point differences with one-sided flux matching on the interfaces.
//! - [`analysis`]: nodal fields, self-convergence norms, and observed orders.
//! - [`oracle`]: independent brute-force references used by the test suites.
//! - [`experiment`]: example presets, convergence tables, and output writers.

pub mod analysis;
pub mod coeff;
pub mod error;
pub mod experiment;
pub mod fdm;
pub mod fem;
pub mod mesh;
pub mod oracle;
pub mod sparse;

pub use analysis::{ConvergenceRow, ScalarField};
pub use coeff::CoefficientField;
pub use error::{Error, Result};
pub use mesh::{DofMap, GridSpec, PointClass};
pub use sparse::{CsrMatrix, SolverConfig, SolverMethod, SparseSystem};
