//! Finite elements with tensor-product hat functions `phi_i(x) phi_j(y)`.
//!
//! The basis is bilinear on every grid cell. Since every interface line is a
//! grid line, `a` is constant on each grid cell and the stiffness integrals are
//! evaluated exactly. The load vector uses 2x2 Gauss quadrature per cell.

use crate::analysis::ScalarField;
use crate::coeff::CoefficientField;
use crate::error::{Error, Result};
use crate::mesh::{DofMap, GridSpec};
use crate::sparse::{factor_solve, CsrMatrix, SolverConfig, SparseSystem};

/// Exact `int grad phi_p . grad phi_q` over one square cell, times 6, for the
/// local node order SW, SE, NE, NW. Independent of the cell size.
const STIFFNESS_X6: [[f64; 4]; 4] = [
    [4.0, -1.0, -2.0, -1.0],
    [-1.0, 4.0, -1.0, -2.0],
    [-2.0, -1.0, 4.0, -1.0],
    [-1.0, -2.0, -1.0, 4.0],
];

/// Local offsets `(di, dj)` of the SW, SE, NE, NW corners.
pub(crate) const CORNERS: [(usize, usize); 4] = [(0, 0), (1, 0), (1, 1), (0, 1)];

/// Element stiffness matrix `a_cell * K0` for one grid cell.
pub fn element_stiffness(a_cell: f64) -> Result<[[f64; 4]; 4]> {
    if !(a_cell > 0.0 && a_cell.is_finite()) {
        return Err(Error::usage(format!(
            "cell coefficient must be positive, got {a_cell}"
        )));
    }
    let mut k = [[0.0; 4]; 4];
    for (p, row) in k.iter_mut().enumerate() {
        for (q, v) in row.iter_mut().enumerate() {
            *v = a_cell * STIFFNESS_X6[p][q] / 6.0;
        }
    }
    Ok(k)
}

/// Model problem for the finite element solver.
#[derive(Clone, Copy)]
pub struct FemProblem<'a> {
    pub grid: GridSpec,
    pub coeff: &'a CoefficientField,
    pub source: &'a (dyn Fn(f64, f64) -> f64 + Sync),
}

impl<'a> FemProblem<'a> {
    pub fn new(
        grid: GridSpec,
        coeff: &'a CoefficientField,
        source: &'a (dyn Fn(f64, f64) -> f64 + Sync),
    ) -> Result<Self> {
        if grid.m() != coeff.m() {
            return Err(Error::usage(format!(
                "grid was built for m = {} but the coefficient field has m = {}",
                grid.m(),
                coeff.m()
            )));
        }
        Ok(Self {
            grid,
            coeff,
            source,
        })
    }

    /// Coefficient on the grid cell with lower-left node `(i, j)`.
    fn cell_coefficient(&self, i: usize, j: usize) -> f64 {
        let (col, row) = self.grid.interface_cell_of_grid_cell(i, j);
        self.coeff.value(row, col)
    }
}

/// Assembles the stiffness matrix and load vector over all interior nodes,
/// intersection nodes included. Dirichlet nodes are eliminated.
pub fn assemble_fem(problem: &FemProblem<'_>) -> Result<SparseSystem> {
    let grid = problem.grid;
    let n = grid.n();
    let h = grid.h();
    let dofs = DofMap::new(grid, false);
    let mut triplets = Vec::with_capacity(16 * n * n);
    let mut rhs = vec![0.0; dofs.len()];

    let g = 0.5 / 3f64.sqrt();
    let gauss = [0.5 - g, 0.5 + g];
    let weight = 0.25 * h * h;

    for j in 0..n {
        for i in 0..n {
            let ke = element_stiffness(problem.cell_coefficient(i, j))?;
            let local: [Option<usize>; 4] = CORNERS.map(|(di, dj)| dofs.dof(i + di, j + dj));
            for (p, dp) in local.iter().enumerate() {
                let Some(row) = *dp else { continue };
                for (q, dq) in local.iter().enumerate() {
                    if let Some(col) = *dq {
                        triplets.push((row, col, ke[p][q]));
                    }
                }
            }
            for &xi in &gauss {
                for &eta in &gauss {
                    let f = (problem.source)(h * (i as f64 + xi), h * (j as f64 + eta));
                    if !f.is_finite() {
                        return Err(Error::usage(format!(
                            "source is not finite near cell ({i}, {j})"
                        )));
                    }
                    let shape = [(1.0 - xi) * (1.0 - eta), xi * (1.0 - eta), xi * eta, (1.0 - xi) * eta];
                    for (p, dp) in local.iter().enumerate() {
                        if let Some(row) = *dp {
                            rhs[row] += weight * f * shape[p];
                        }
                    }
                }
            }
        }
    }
    let matrix = CsrMatrix::from_triplets(dofs.len(), dofs.len(), &triplets)?;
    Ok(SparseSystem { matrix, rhs, dofs })
}

/// Solves the finite element system and returns nodal values on the whole
/// grid (boundary nodes 0, no masked nodes).
pub fn solve_fem(problem: &FemProblem<'_>, solver: &SolverConfig) -> Result<ScalarField> {
    let system = assemble_fem(problem)?;
    let x = factor_solve(&system.matrix, &system.rhs, solver)?;
    let mut field = ScalarField::zeros(problem.grid.n());
    for (dof, &(i, j)) in system.dofs.nodes().iter().enumerate() {
        field.set(i, j, x[dof]);
    }
    Ok(field)
}
