//! Uniform node-centred grids on a rectangle, nodal and per-cell fields, and
//! the difference/quadrature operators every other module builds on.
//!
//! Nodes are indexed row-major, `k = j * nx + i`, with `i` along x. Cell
//! `(i, j)` has lower-left node `(i, j)` and index `j * (nx - 1) + i`.
//! Horizontal edge `(i, j)` joins nodes `(i, j)` and `(i + 1, j)`; vertical
//! edge `(i, j)` joins `(i, j)` and `(i, j + 1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel;

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Domain {
    pub const fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Domain { x0, x1, y0, y1 }
    }

    pub const fn unit_square() -> Self {
        Domain::new(0.0, 1.0, 0.0, 1.0)
    }

    /// `[-1, 1]²`, the default domain of every scenario.
    pub const fn symmetric_square() -> Self {
        Domain::new(-1.0, 1.0, -1.0, 1.0)
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, x: f64, y: f64, tol: f64) -> bool {
        x >= self.x0 - tol && x <= self.x1 + tol && y >= self.y0 - tol && y <= self.y1 + tol
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.x0, self.x1, self.y0, self.y1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub domain: Domain,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, domain: Domain) -> Self {
        GridSpec { nx, ny, domain }
    }
}

/// The four sides of the rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];

    pub fn outward_normal(self) -> [f64; 2] {
        match self {
            Side::Left => [-1.0, 0.0],
            Side::Right => [1.0, 0.0],
            Side::Bottom => [0.0, -1.0],
            Side::Top => [0.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    nx: usize,
    ny: usize,
    domain: Domain,
    h: f64,
}

impl Grid {
    /// Requires at least three nodes per axis and square cells.
    pub fn new(spec: GridSpec) -> Result<Grid> {
        let GridSpec { nx, ny, domain } = spec;
        if nx < 3 || ny < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 nodes per axis, got {nx} x {ny}"
            )));
        }
        let (w, hgt) = (domain.width(), domain.height());
        if !(w.is_finite() && hgt.is_finite() && w > 0.0 && hgt > 0.0) {
            return Err(Error::InvalidGrid(format!("degenerate domain {domain:?}")));
        }
        let hx = w / (nx - 1) as f64;
        let hy = hgt / (ny - 1) as f64;
        if (hx - hy).abs() > 1e-12 * hx {
            return Err(Error::InvalidGrid(format!(
                "cells are not square: hx = {hx}, hy = {hy}"
            )));
        }
        Ok(Grid { nx, ny, domain, h: hx })
    }

    /// Grid on `domain` whose spacing is the largest value `≤ h_max` that
    /// divides the width; the height must then be an integer multiple of it.
    pub fn with_max_spacing(domain: Domain, h_max: f64) -> Result<Grid> {
        if h_max.is_nan() || h_max <= 0.0 {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {h_max}")));
        }
        let cells_x = (domain.width() / h_max - 1e-9).ceil().max(2.0) as usize;
        let h = domain.width() / cells_x as f64;
        let cells_y_real = domain.height() / h;
        let cells_y = cells_y_real.round();
        if (cells_y_real - cells_y).abs() > 1e-9 * cells_y.max(1.0) {
            return Err(Error::InvalidGrid(format!(
                "height {} is not a multiple of spacing {h}",
                domain.height()
            )));
        }
        Grid::new(GridSpec::new(cells_x + 1, cells_y as usize + 1, domain))
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec::new(self.nx, self.ny, self.domain)
    }

    pub fn node_count(&self) -> usize {
        self.nx * self.ny
    }

    pub fn cells_x(&self) -> usize {
        self.nx - 1
    }

    pub fn cells_y(&self) -> usize {
        self.ny - 1
    }

    pub fn cell_count(&self) -> usize {
        self.cells_x() * self.cells_y()
    }

    pub fn horizontal_edge_count(&self) -> usize {
        (self.nx - 1) * self.ny
    }

    pub fn vertical_edge_count(&self) -> usize {
        self.nx * (self.ny - 1)
    }

    pub fn edge_count(&self) -> usize {
        self.horizontal_edge_count() + self.vertical_edge_count()
    }

    pub fn interior_count(&self) -> usize {
        (self.nx - 2) * (self.ny - 2)
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn node_ij(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        if i == self.nx - 1 {
            self.domain.x1
        } else {
            self.domain.x0 + i as f64 * self.h
        }
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        if j == self.ny - 1 {
            self.domain.y1
        } else {
            self.domain.y0 + j as f64 * self.h
        }
    }

    #[inline]
    pub fn coords(&self, k: usize) -> (f64, f64) {
        let (i, j) = self.node_ij(k);
        (self.x(i), self.y(j))
    }

    #[inline]
    pub fn cell(&self, i: usize, j: usize) -> usize {
        j * (self.nx - 1) + i
    }

    #[inline]
    pub fn cell_ij(&self, c: usize) -> (usize, usize) {
        (c % (self.nx - 1), c / (self.nx - 1))
    }

    #[inline]
    pub fn cell_center(&self, c: usize) -> (f64, f64) {
        let (i, j) = self.cell_ij(c);
        (
            self.domain.x0 + (i as f64 + 0.5) * self.h,
            self.domain.y0 + (j as f64 + 0.5) * self.h,
        )
    }

    /// Node indices of the four corners of cell `c`: (i,j), (i+1,j), (i,j+1), (i+1,j+1).
    #[inline]
    pub fn cell_corners(&self, c: usize) -> [usize; 4] {
        let (i, j) = self.cell_ij(c);
        let k = self.node(i, j);
        [k, k + 1, k + self.nx, k + self.nx + 1]
    }

    #[inline]
    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.nx - 1 || j == self.ny - 1
    }

    #[inline]
    pub fn is_boundary_node(&self, k: usize) -> bool {
        let (i, j) = self.node_ij(k);
        self.is_boundary(i, j)
    }

    /// Sides a node lies on (two for corners, none for interior nodes).
    pub fn sides_of(&self, i: usize, j: usize) -> Vec<Side> {
        let mut sides = Vec::with_capacity(2);
        if i == 0 {
            sides.push(Side::Left);
        }
        if i == self.nx - 1 {
            sides.push(Side::Right);
        }
        if j == 0 {
            sides.push(Side::Bottom);
        }
        if j == self.ny - 1 {
            sides.push(Side::Top);
        }
        sides
    }

    /// Nodes along `side`, ordered by increasing tangential coordinate.
    pub fn side_nodes(&self, side: Side) -> Vec<usize> {
        match side {
            Side::Left => (0..self.ny).map(|j| self.node(0, j)).collect(),
            Side::Right => (0..self.ny).map(|j| self.node(self.nx - 1, j)).collect(),
            Side::Bottom => (0..self.nx).map(|i| self.node(i, 0)).collect(),
            Side::Top => (0..self.nx).map(|i| self.node(i, self.ny - 1)).collect(),
        }
    }

    /// Every boundary node exactly once, in increasing index order.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|&k| self.is_boundary_node(k)).collect()
    }

    /// Trapezoid weight of node `(i, j)`: h² inside, h²/2 on a side, h²/4 at a corner.
    #[inline]
    pub fn node_weight(&self, i: usize, j: usize) -> f64 {
        let mut w = self.h * self.h;
        if i == 0 || i == self.nx - 1 {
            w *= 0.5;
        }
        if j == 0 || j == self.ny - 1 {
            w *= 0.5;
        }
        w
    }

    /// Quadrature weight of horizontal edge `(i, j)`: h² inside, h²/2 on ∂Ω.
    #[inline]
    pub fn horizontal_edge_weight(&self, j: usize) -> f64 {
        if j == 0 || j == self.ny - 1 {
            0.5 * self.h * self.h
        } else {
            self.h * self.h
        }
    }

    #[inline]
    pub fn vertical_edge_weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.nx - 1 {
            0.5 * self.h * self.h
        } else {
            self.h * self.h
        }
    }
}

/// Nodal real field.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::FieldLength {
                expected: grid.node_count(),
                actual: values.len(),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(k));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        ScalarField {
            grid,
            values: vec![c; grid.node_count()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64 + Sync) -> Self {
        let values = parallel::map_collect(grid.node_count(), |k| {
            let (x, y) = grid.coords(k);
            f(x, y)
        });
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.node(i, j)]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync) -> ScalarField {
        let values = parallel::map_collect(self.values.len(), |k| f(self.values[k]));
        ScalarField {
            grid: self.grid,
            values,
        }
    }

    /// Bilinear interpolation. Points within `1e-9 h` outside the domain are
    /// clamped onto it; anything further out is `None`.
    pub fn sample(&self, x: f64, y: f64) -> Option<f64> {
        let g = &self.grid;
        let d = g.domain;
        if !d.contains(x, y, 1e-9 * g.h) {
            return None;
        }
        let (i, s) = locate(x - d.x0, g.h, g.nx);
        let (j, t) = locate(y - d.y0, g.h, g.ny);
        let k = g.node(i, j);
        let f00 = self.values[k];
        let f10 = self.values[k + 1];
        let f01 = self.values[k + g.nx];
        let f11 = self.values[k + g.nx + 1];
        Some((1.0 - t) * ((1.0 - s) * f00 + s * f10) + t * ((1.0 - s) * f01 + s * f11))
    }
}

/// Cell index and local coordinate in [0, 1] for offset `r` along an axis.
#[inline]
fn locate(r: f64, h: f64, n: usize) -> (usize, f64) {
    let q = (r / h).clamp(0.0, (n - 1) as f64);
    let i = (q.floor() as usize).min(n - 2);
    (i, q - i as f64)
}

/// Per-cell real field (discrepancy, |∇w|).
#[derive(Debug, Clone, PartialEq)]
pub struct CellScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl CellScalarField {
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.cell_count());
        CellScalarField { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `Σ value · h²`.
    pub fn integrate(&self) -> f64 {
        let h2 = self.grid.h * self.grid.h;
        parallel::sum_by(self.values.len(), |c| self.values[c]) * h2
    }
}

/// Per-cell 2-vectors, typically cell gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct CellVectorField {
    grid: Grid,
    values: Vec<[f64; 2]>,
}

impl CellVectorField {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[[f64; 2]] {
        &self.values
    }

    #[inline]
    pub fn at(&self, c: usize) -> [f64; 2] {
        self.values[c]
    }
}

/// Symmetric 2×2 matrix `[[xx, xy], [xy, yy]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Sym2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Sym2 {
    pub const ZERO: Sym2 = Sym2 {
        xx: 0.0,
        xy: 0.0,
        yy: 0.0,
    };
    pub const IDENTITY: Sym2 = Sym2 {
        xx: 1.0,
        xy: 0.0,
        yy: 1.0,
    };

    pub const fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Sym2 { xx, xy, yy }
    }

    pub const fn diag(a: f64, b: f64) -> Self {
        Sym2::new(a, 0.0, b)
    }

    /// `a ⊗ a`.
    #[inline]
    pub fn outer(a: [f64; 2]) -> Self {
        Sym2::new(a[0] * a[0], a[0] * a[1], a[1] * a[1])
    }

    #[inline]
    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    #[inline]
    pub fn scale(&self, s: f64) -> Self {
        Sym2::new(s * self.xx, s * self.xy, s * self.yy)
    }

    #[inline]
    pub fn add(&self, o: &Sym2) -> Self {
        Sym2::new(self.xx + o.xx, self.xy + o.xy, self.yy + o.yy)
    }

    #[inline]
    pub fn sub(&self, o: &Sym2) -> Self {
        Sym2::new(self.xx - o.xx, self.xy - o.xy, self.yy - o.yy)
    }

    pub fn frobenius(&self) -> f64 {
        (self.xx * self.xx + 2.0 * self.xy * self.xy + self.yy * self.yy).sqrt()
    }

    /// `self · self`.
    pub fn square(&self) -> Self {
        Sym2::new(
            self.xx * self.xx + self.xy * self.xy,
            self.xy * (self.xx + self.yy),
            self.xy * self.xy + self.yy * self.yy,
        )
    }

    /// Frobenius product with a general 2×2 matrix `m[row][col]`.
    #[inline]
    pub fn contract(&self, m: &[[f64; 2]; 2]) -> f64 {
        self.xx * m[0][0] + self.xy * (m[0][1] + m[1][0]) + self.yy * m[1][1]
    }

    /// Eigenvalues in increasing order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let m = 0.5 * self.trace();
        let r = (0.25 * (self.xx - self.yy).powi(2) + self.xy * self.xy).sqrt();
        [m - r, m + r]
    }
}

impl std::iter::Sum for Sym2 {
    fn sum<I: Iterator<Item = Sym2>>(iter: I) -> Sym2 {
        iter.fold(Sym2::ZERO, |acc, s| acc.add(&s))
    }
}

/// Per-cell symmetric 2×2 field.
#[derive(Debug, Clone, PartialEq)]
pub struct CellTensorField {
    grid: Grid,
    values: Vec<Sym2>,
}

impl CellTensorField {
    pub fn from_values(grid: Grid, values: Vec<Sym2>) -> Self {
        assert_eq!(values.len(), grid.cell_count());
        CellTensorField { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Sym2] {
        &self.values
    }

    /// `Σ T · h²`.
    pub fn integrate(&self) -> Sym2 {
        let h2 = self.grid.h * self.grid.h;
        parallel::sum_by(self.values.len(), |c| self.values[c]).scale(h2)
    }
}

/// Cell-centre gradient: each component is the mean of the two parallel
/// edge difference quotients of the cell.
pub fn cell_gradient(f: &ScalarField) -> CellVectorField {
    let g = *f.grid();
    let vals = f.values();
    let values = parallel::map_collect(g.cell_count(), |c| {
        let [a, b, cc, d] = g.cell_corners(c);
        let inv = 0.5 / g.h;
        [
            ((vals[b] - vals[a]) + (vals[d] - vals[cc])) * inv,
            ((vals[cc] - vals[a]) + (vals[d] - vals[b])) * inv,
        ]
    });
    CellVectorField { grid: g, values }
}

/// Cell average of the four corner values.
pub fn cell_average(f: &ScalarField) -> Vec<f64> {
    let g = *f.grid();
    let vals = f.values();
    parallel::map_collect(g.cell_count(), |c| {
        let [a, b, cc, d] = g.cell_corners(c);
        0.25 * (vals[a] + vals[b] + vals[cc] + vals[d])
    })
}

/// 2D trapezoid rule on nodal values.
pub fn integrate_nodal(f: &ScalarField) -> f64 {
    let g = *f.grid();
    let vals = f.values();
    parallel::sum_by(g.node_count(), |k| {
        let (i, j) = g.node_ij(k);
        g.node_weight(i, j) * vals[k]
    })
}

/// Second-order one-sided outward normal derivative along one side,
/// ordered as [`Grid::side_nodes`].
pub fn normal_derivative_on_side(f: &ScalarField, side: Side) -> Vec<f64> {
    let g = f.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let inv = 1.0 / (2.0 * g.h());
    let one_sided = |f0: f64, f1: f64, f2: f64| (3.0 * f0 - 4.0 * f1 + f2) * inv;
    match side {
        Side::Left => (0..ny).map(|j| one_sided(f.at(0, j), f.at(1, j), f.at(2, j))).collect(),
        Side::Right => (0..ny)
            .map(|j| one_sided(f.at(nx - 1, j), f.at(nx - 2, j), f.at(nx - 3, j)))
            .collect(),
        Side::Bottom => (0..nx).map(|i| one_sided(f.at(i, 0), f.at(i, 1), f.at(i, 2))).collect(),
        Side::Top => (0..nx)
            .map(|i| one_sided(f.at(i, ny - 1), f.at(i, ny - 2), f.at(i, ny - 3)))
            .collect(),
    }
}

/// Outward normal derivative at every boundary node (interior entries are
/// zero). Corners carry the mean of their two sides.
pub fn boundary_normal_derivative(f: &ScalarField) -> ScalarField {
    let g = *f.grid();
    let mut out = vec![0.0; g.node_count()];
    let mut hits = vec![0u8; g.node_count()];
    for side in Side::ALL {
        for (k, d) in g.side_nodes(side).into_iter().zip(normal_derivative_on_side(f, side)) {
            out[k] += d;
            hits[k] += 1;
        }
    }
    for (o, &n) in out.iter_mut().zip(&hits) {
        if n > 1 {
            *o /= n as f64;
        }
    }
    ScalarField { grid: g, values: out }
}

/// Trapezoid rule over ∂Ω of a per-side integrand `f(side, node, position
/// along side)`; corner nodes are visited once per adjacent side with half
/// weight each.
pub fn integrate_boundary(grid: &Grid, mut f: impl FnMut(Side, usize, usize) -> f64) -> f64 {
    let h = grid.h();
    let mut total = 0.0;
    for side in Side::ALL {
        let nodes = grid.side_nodes(side);
        let last = nodes.len() - 1;
        for (pos, &k) in nodes.iter().enumerate() {
            let w = if pos == 0 || pos == last { 0.5 * h } else { h };
            total += w * f(side, k, pos);
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> Grid {
        Grid::new(GridSpec::new(n, n, Domain::unit_square())).unwrap()
    }

    #[test]
    fn counts_on_five_by_five() {
        let g = unit(5);
        assert_eq!(g.h(), 0.25);
        assert_eq!(g.node_count(), 25);
        assert_eq!(g.cell_count(), 16);
        assert_eq!(g.edge_count(), 40);
        assert_eq!(g.interior_count(), 9);
        assert_eq!(g.boundary_nodes().len(), 16);
    }

    #[test]
    fn rejects_non_square_cells_and_tiny_grids() {
        assert!(matches!(
            Grid::new(GridSpec::new(3, 5, Domain::unit_square())),
            Err(Error::InvalidGrid(_))
        ));
        assert!(Grid::new(GridSpec::new(2, 2, Domain::unit_square())).is_err());
    }

    #[test]
    fn spacing_rule_hits_exact_divisions() {
        let g = Grid::with_max_spacing(Domain::symmetric_square(), 0.04 / 4.0).unwrap();
        assert_eq!((g.nx(), g.ny()), (201, 201));
        let g = Grid::with_max_spacing(Domain::symmetric_square(), 0.16 / 4.0).unwrap();
        assert_eq!(g.nx(), 51);
    }

    #[test]
    fn gradient_exact_on_affine_and_bilinear() {
        let g = unit(7);
        let f = ScalarField::from_fn(g, |x, _| x);
        assert!(cell_gradient(&f)
            .values()
            .iter()
            .all(|d| (d[0] - 1.0).abs() < 1e-12 && d[1].abs() < 1e-12));

        let f = ScalarField::constant(g, 3.0);
        assert!(cell_gradient(&f).values().iter().all(|d| *d == [0.0, 0.0]));

        let f = ScalarField::from_fn(g, |x, y| x * y);
        let grad = cell_gradient(&f);
        for c in 0..g.cell_count() {
            let (xc, yc) = g.cell_center(c);
            let d = grad.at(c);
            assert!((d[0] - yc).abs() < 1e-12 && (d[1] - xc).abs() < 1e-12);
        }
    }

    #[test]
    fn trapezoid_values() {
        let g = unit(9);
        assert!((integrate_nodal(&ScalarField::constant(g, 1.0)) - 1.0).abs() < 1e-14);
        assert!((integrate_nodal(&ScalarField::from_fn(g, |x, _| x)) - 0.5).abs() < 1e-14);
        let g3 = unit(3);
        let sq = ScalarField::from_fn(g3, |x, _| x * x);
        assert!((integrate_nodal(&sq) - 0.375).abs() < 1e-15);
    }

    #[test]
    fn normal_derivatives() {
        let g = unit(5);
        let f = ScalarField::from_fn(g, |x, _| x);
        for d in normal_derivative_on_side(&f, Side::Left) {
            assert!((d + 1.0).abs() < 1e-12);
        }
        let sq = ScalarField::from_fn(g, |x, _| x * x);
        for d in normal_derivative_on_side(&sq, Side::Right) {
            assert!((d - 2.0).abs() < 1e-12);
        }
        let c = boundary_normal_derivative(&ScalarField::constant(g, 4.0));
        assert!(c.values().iter().all(|&d| d == 0.0));
        // corner (1, 1): right side gives 2, top side gives 0
        let bd = boundary_normal_derivative(&sq);
        assert!((bd.at(4, 4) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_integral_of_one_is_perimeter() {
        let g = Grid::new(GridSpec::new(11, 21, Domain::new(0.0, 1.0, 0.0, 2.0))).unwrap();
        let p = integrate_boundary(&g, |_, _, _| 1.0);
        assert!((p - 6.0).abs() < 1e-12);
    }

    #[test]
    fn bilinear_sampling() {
        let g = unit(5);
        let f = ScalarField::from_fn(g, |x, y| 1.0 + 2.0 * x - y + x * y);
        for &(x, y) in &[(0.1, 0.3), (1.0, 1.0), (0.0, 0.0), (0.6, 0.95)] {
            let s = f.sample(x, y).unwrap();
            assert!((s - (1.0 + 2.0 * x - y + x * y)).abs() < 1e-12);
        }
        assert_eq!(f.sample(0.5, 0.5), Some(f.at(2, 2)));
        assert!(f.sample(1.1, 0.5).is_none());
    }

    #[test]
    fn sym2_algebra() {
        let t = Sym2::new(2.0, 1.0, 3.0);
        let sq = t.square();
        assert_eq!(sq, Sym2::new(5.0, 5.0, 10.0));
        let [a, b] = Sym2::diag(1.0, 0.0).eigenvalues();
        assert_eq!((a, b), (0.0, 1.0));
        assert_eq!(t.contract(&[[1.0, 2.0], [3.0, 4.0]]), 2.0 + 5.0 + 12.0);
    }
}
