//! Finite differences with flux matching on the interface lines.
//!
//! - Interior nodes use the 5-point Laplacian scaled by the local coefficient:
//!   `a (u_W + u_E + u_S + u_N - 4 u_C) = -h^2 f`.
//! - A node on a vertical interface line equates the one-sided fluxes
//!   `a+ (-3u_C + 4u_E - u_EE) - a- (3u_C - 4u_W + u_WW) = 0`, with `a-`, `a+`
//!   the coefficients one grid step to the left and right. Horizontal interface
//!   nodes use the same row along `y`.
//! - Intersection nodes carry no unknown and no stencil references them.

use crate::analysis::ScalarField;
use crate::coeff::CoefficientField;
use crate::error::{Error, Result};
use crate::mesh::{DofMap, GridSpec, PointClass};
use crate::sparse::{factor_solve, CsrMatrix, SolverConfig, SparseSystem};

/// Direction of a one-sided difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Uses `u_0, u_{-1}, u_{-2}`.
    Backward,
    /// Uses `u_0, u_{+1}, u_{+2}`.
    Forward,
}

/// Second-order one-sided first derivative from three equally spaced samples
/// `[u_0, u_{±1}, u_{±2}]`, ordered away from the evaluation point.
pub fn one_sided_dx(values: [f64; 3], h: f64, side: Side) -> f64 {
    let [u0, u1, u2] = values;
    match side {
        Side::Backward => (3.0 * u0 - 4.0 * u1 + u2) / (2.0 * h),
        Side::Forward => (-3.0 * u0 + 4.0 * u1 - u2) / (2.0 * h),
    }
}

/// One equation of the finite difference system in node coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct StencilRow {
    pub center: (usize, usize),
    pub entries: Vec<((usize, usize), f64)>,
    pub rhs: f64,
}

impl StencilRow {
    pub fn weight_sum(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w).sum()
    }

    pub fn max_abs_weight(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, (_, w)| m.max(w.abs()))
    }

    pub fn weights(&self) -> Vec<f64> {
        self.entries.iter().map(|&(_, w)| w).collect()
    }

    /// `sum w_k u(node_k)` for a nodal function `u`.
    pub fn apply(&self, u: impl Fn(usize, usize) -> f64) -> f64 {
        self.entries.iter().map(|&((i, j), w)| w * u(i, j)).sum()
    }
}

fn expect_class(grid: &GridSpec, i: usize, j: usize, want: PointClass) -> Result<()> {
    let got = grid.classify(i, j)?;
    if got != want {
        return Err(Error::usage(format!(
            "node ({i}, {j}) is {got:?}, expected {want:?}"
        )));
    }
    Ok(())
}

/// 5-point row at an interior node.
pub fn interior_row(
    grid: &GridSpec,
    coeff: &CoefficientField,
    f: &dyn Fn(f64, f64) -> f64,
    i: usize,
    j: usize,
) -> Result<StencilRow> {
    expect_class(grid, i, j, PointClass::Interior)?;
    let (x, y) = (grid.coord(i), grid.coord(j));
    let a = coeff.sample(x, y)?;
    let h = grid.h();
    Ok(StencilRow {
        center: (i, j),
        entries: vec![
            ((i - 1, j), a),
            ((i + 1, j), a),
            ((i, j - 1), a),
            ((i, j + 1), a),
            ((i, j), -4.0 * a),
        ],
        rhs: -h * h * f(x, y),
    })
}

fn flux_weights(a_minus: f64, a_plus: f64) -> [f64; 5] {
    [
        -a_minus,
        4.0 * a_minus,
        -3.0 * (a_minus + a_plus),
        4.0 * a_plus,
        -a_plus,
    ]
}

/// Flux-matching row at a node on a vertical interface line; weights sit on
/// `(i-2..=i+2, j)`.
pub fn interface_v_row(
    grid: &GridSpec,
    coeff: &CoefficientField,
    i: usize,
    j: usize,
) -> Result<StencilRow> {
    expect_class(grid, i, j, PointClass::InterfaceV)?;
    let (x, y, h) = (grid.coord(i), grid.coord(j), grid.h());
    let w = flux_weights(coeff.sample(x - h, y)?, coeff.sample(x + h, y)?);
    Ok(StencilRow {
        center: (i, j),
        entries: (0..5).map(|k| ((i + k - 2, j), w[k])).collect(),
        rhs: 0.0,
    })
}

/// Flux-matching row at a node on a horizontal interface line; weights sit on
/// `(i, j-2..=j+2)`.
pub fn interface_h_row(
    grid: &GridSpec,
    coeff: &CoefficientField,
    i: usize,
    j: usize,
) -> Result<StencilRow> {
    expect_class(grid, i, j, PointClass::InterfaceH)?;
    let (x, y, h) = (grid.coord(i), grid.coord(j), grid.h());
    let w = flux_weights(coeff.sample(x, y - h)?, coeff.sample(x, y + h)?);
    Ok(StencilRow {
        center: (i, j),
        entries: (0..5).map(|k| ((i, j + k - 2), w[k])).collect(),
        rhs: 0.0,
    })
}

/// Model problem for the finite difference solver.
#[derive(Clone, Copy)]
pub struct FdmProblem<'a> {
    pub grid: GridSpec,
    pub coeff: &'a CoefficientField,
    pub source: &'a (dyn Fn(f64, f64) -> f64 + Sync),
}

impl<'a> FdmProblem<'a> {
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

    /// Stencil row for an unknown-carrying node, dispatched on its class.
    pub fn row(&self, i: usize, j: usize) -> Result<StencilRow> {
        match self.grid.classify(i, j)? {
            PointClass::Interior => interior_row(&self.grid, self.coeff, self.source, i, j),
            PointClass::InterfaceV => interface_v_row(&self.grid, self.coeff, i, j),
            PointClass::InterfaceH => interface_h_row(&self.grid, self.coeff, i, j),
            other => Err(Error::usage(format!(
                "node ({i}, {j}) is {other:?} and has no finite difference row"
            ))),
        }
    }

    /// Stencil rows for every unknown, in unknown order.
    pub fn rows(&self, dofs: &DofMap) -> Result<Vec<StencilRow>> {
        dofs.nodes().iter().map(|&(i, j)| self.row(i, j)).collect()
    }
}

/// Assembles the (nonsymmetric) finite difference system over all nodes except
/// boundary and intersection nodes. Boundary values are zero, so stencil
/// entries on the boundary are dropped.
pub fn assemble_fdm(problem: &FdmProblem<'_>) -> Result<SparseSystem> {
    let grid = problem.grid;
    let dofs = DofMap::new(grid, true);
    let mut triplets = Vec::with_capacity(5 * dofs.len());
    let mut rhs = Vec::with_capacity(dofs.len());
    for (r, &(i, j)) in dofs.nodes().iter().enumerate() {
        let row = problem.row(i, j)?;
        for &((ni, nj), w) in &row.entries {
            match dofs.dof(ni, nj) {
                Some(c) => triplets.push((r, c, w)),
                None => match grid.classify_unchecked(ni, nj) {
                    PointClass::Boundary => {}
                    class => {
                        return Err(Error::usage(format!(
                            "stencil at ({i}, {j}) references {class:?} node ({ni}, {nj})"
                        )))
                    }
                },
            }
        }
        rhs.push(row.rhs);
    }
    let matrix = CsrMatrix::from_triplets(dofs.len(), dofs.len(), &triplets)?;
    Ok(SparseSystem { matrix, rhs, dofs })
}

/// Solves the finite difference system. Intersection nodes come back masked.
pub fn solve_fdm(problem: &FdmProblem<'_>, solver: &SolverConfig) -> Result<ScalarField> {
    let system = assemble_fdm(problem)?;
    let x = factor_solve(&system.matrix, &system.rhs, solver)?;
    let grid = problem.grid;
    let mut field = ScalarField::zeros(grid.n());
    for (i, j) in grid.nodes() {
        if grid.classify_unchecked(i, j) == PointClass::Intersection {
            field.mask_out(i, j);
        }
    }
    for (dof, &(i, j)) in system.dofs.nodes().iter().enumerate() {
        field.set(i, j, x[dof]);
    }
    Ok(field)
}
