//! Uniform grid geometry and node classification.
//!
//! The grid has nodes `(x_i, y_j) = (i h, j h)` for `0 <= i, j <= N`, `h = 1/N`.
//! Interface lines sit at `x = p/m` and `y = q/m` for `1 <= p, q <= m-1`; because
//! `m` divides `N` they coincide with grid lines `i = p N/m` and `j = q N/m`.
//! All membership tests use integer arithmetic.

use crate::error::{Error, Result};

/// Grid resolution `N` paired with the interface frequency `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridSpec {
    n: usize,
    m: usize,
}

impl GridSpec {
    /// Creates a grid with `n` intervals per side for an `m x m` interface partition.
    ///
    /// Requires `m >= 2`, `n % m == 0` and `n / m >= 2`, so that every one-sided
    /// stencil and every coefficient probe at distance `h` stays inside a cell.
    pub fn new(n: usize, m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::usage(format!("interface frequency m must be >= 2, got {m}")));
        }
        if !n.is_multiple_of(m) {
            return Err(Error::usage(format!(
                "grid size N={n} is not a multiple of m={m}; interface lines must be grid lines"
            )));
        }
        if n / m < 2 {
            return Err(Error::usage(format!(
                "grid size N={n} gives fewer than 2 intervals per interface cell (m={m})"
            )));
        }
        Ok(Self { n, m })
    }

    /// Grid with `N = 2^level`.
    pub fn from_level(level: u32, m: usize) -> Result<Self> {
        if level >= usize::BITS - 1 {
            return Err(Error::usage(format!("level {level} is too large")));
        }
        Self::new(1usize << level, m)
    }

    /// Intervals per side.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Interface cells per side.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Mesh size `1/N`.
    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Grid intervals per interface cell, `N/m`.
    pub fn cell_width(&self) -> usize {
        self.n / self.m
    }

    /// Total number of nodes, `(N+1)^2`.
    pub fn node_count(&self) -> usize {
        (self.n + 1) * (self.n + 1)
    }

    /// Row-major (j-major) flat index of node `(i, j)`.
    #[inline]
    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * (self.n + 1) + i
    }

    pub fn coord(&self, i: usize) -> f64 {
        i as f64 / self.n as f64
    }

    /// True when grid line `k` is an interior interface line.
    #[inline]
    pub fn on_interface_line(&self, k: usize) -> bool {
        k > 0 && k < self.n && (k * self.m).is_multiple_of(self.n)
    }

    /// Classifies node `(i, j)`.
    pub fn classify(&self, i: usize, j: usize) -> Result<PointClass> {
        if i > self.n || j > self.n {
            return Err(Error::usage(format!(
                "node ({i}, {j}) is outside the grid 0..={}",
                self.n
            )));
        }
        Ok(self.classify_unchecked(i, j))
    }

    pub(crate) fn classify_unchecked(&self, i: usize, j: usize) -> PointClass {
        if i == 0 || j == 0 || i == self.n || j == self.n {
            return PointClass::Boundary;
        }
        match (self.on_interface_line(i), self.on_interface_line(j)) {
            (true, true) => PointClass::Intersection,
            (true, false) => PointClass::InterfaceV,
            (false, true) => PointClass::InterfaceH,
            (false, false) => PointClass::Interior,
        }
    }

    /// Iterator over all nodes in j-major order.
    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize)> {
        let n = self.n;
        (0..=n).flat_map(move |j| (0..=n).map(move |i| (i, j)))
    }

    /// Cell index `(column, row)` of the interface cell containing the open grid
    /// cell with lower-left node `(i, j)`.
    #[inline]
    pub(crate) fn interface_cell_of_grid_cell(&self, i: usize, j: usize) -> (usize, usize) {
        let w = self.cell_width();
        (i / w, j / w)
    }
}

/// Role of a grid node with respect to the boundary and the interface lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PointClass {
    /// On the outer boundary; takes the Dirichlet value 0.
    Boundary,
    /// Strictly inside an interface cell.
    Interior,
    /// On a vertical interface line, away from horizontal ones.
    InterfaceV,
    /// On a horizontal interface line, away from vertical ones.
    InterfaceH,
    /// Where a vertical and a horizontal interface line cross.
    Intersection,
}

/// Bijection between unknown indices and the grid nodes that carry unknowns.
///
/// Boundary nodes never carry unknowns. Intersection nodes are dropped when the
/// map is built with `exclude_intersections`. Numbering is lexicographic with
/// `j` major.
#[derive(Debug, Clone)]
pub struct DofMap {
    grid: GridSpec,
    node_to_dof: Vec<Option<usize>>,
    dof_to_node: Vec<(usize, usize)>,
}

impl DofMap {
    pub fn new(grid: GridSpec, exclude_intersections: bool) -> Self {
        let mut node_to_dof = vec![None; grid.node_count()];
        let mut dof_to_node = Vec::new();
        for (i, j) in grid.nodes() {
            let keep = match grid.classify_unchecked(i, j) {
                PointClass::Boundary => false,
                PointClass::Intersection => !exclude_intersections,
                _ => true,
            };
            if keep {
                node_to_dof[grid.node_index(i, j)] = Some(dof_to_node.len());
                dof_to_node.push((i, j));
            }
        }
        Self {
            grid,
            node_to_dof,
            dof_to_node,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Number of unknowns.
    pub fn len(&self) -> usize {
        self.dof_to_node.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dof_to_node.is_empty()
    }

    /// Unknown index of node `(i, j)`, if it carries one.
    #[inline]
    pub fn dof(&self, i: usize, j: usize) -> Option<usize> {
        self.node_to_dof[self.grid.node_index(i, j)]
    }

    #[inline]
    pub fn node(&self, dof: usize) -> (usize, usize) {
        self.dof_to_node[dof]
    }

    pub fn nodes(&self) -> &[(usize, usize)] {
        &self.dof_to_node
    }
}
