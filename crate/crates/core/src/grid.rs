//! Regular node lattices on axis-aligned boxes, nodal scalar fields and
//! cell-sampled vector fields.
//!
//! Nodes are indexed lexicographically with axis 1 fastest:
//! `flat = i1 + r1*(i2 + r2*i3)`. Cells are the (r_i - 1)-per-axis boxes
//! between nodes; cell quantities (gradients, integrands) live at cell
//! centers, matching the midpoint quadrature used throughout.

use serde::{Deserialize, Serialize};

use crate::error::{Result, XfgError};
use crate::geometry::BoxDomain;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    boxd: BoxDomain,
    res: Vec<usize>,
}

impl Grid {
    /// `res` = nodes per axis, each >= 2.
    pub fn new(boxd: BoxDomain, res: Vec<usize>) -> Result<Self> {
        if res.len() != boxd.dim() {
            return Err(XfgError::argument("grid resolution/box dimension mismatch"));
        }
        if res.iter().any(|&r| r < 2) {
            return Err(XfgError::argument("grid needs at least 2 nodes per axis"));
        }
        Ok(Grid { boxd, res })
    }

    /// Same node count on every axis.
    pub fn uniform(boxd: BoxDomain, nodes_per_axis: usize) -> Result<Self> {
        let n = boxd.dim();
        Grid::new(boxd, vec![nodes_per_axis; n])
    }

    pub fn dim(&self) -> usize {
        self.res.len()
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.boxd
    }

    pub fn res(&self) -> &[usize] {
        &self.res
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.boxd.side(axis) / (self.res[axis] - 1) as f64
    }

    pub fn spacings(&self) -> Vec<f64> {
        (0..self.dim()).map(|a| self.spacing(a)).collect()
    }

    pub fn max_spacing(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).fold(0.0, f64::max)
    }

    pub fn node_count(&self) -> usize {
        self.res.iter().product()
    }

    pub fn cells_per_axis(&self) -> Vec<usize> {
        self.res.iter().map(|r| r - 1).collect()
    }

    pub fn cell_count(&self) -> usize {
        self.res.iter().map(|r| r - 1).product()
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    pub fn node_coords(&self, flat: usize) -> Vec<f64> {
        let multi = unravel(flat, &self.res);
        (0..self.dim())
            .map(|a| self.boxd.lo[a] + multi[a] as f64 * self.spacing(a))
            .collect()
    }

    pub fn node_index(&self, multi: &[usize]) -> usize {
        ravel(multi, &self.res)
    }

    pub fn node_multi(&self, flat: usize) -> Vec<usize> {
        unravel(flat, &self.res)
    }

    pub fn cell_multi(&self, flat: usize) -> Vec<usize> {
        unravel(flat, &self.cells_per_axis())
    }

    pub fn cell_index(&self, multi: &[usize]) -> usize {
        ravel(multi, &self.cells_per_axis())
    }

    pub fn cell_center(&self, flat_cell: usize) -> Vec<f64> {
        let multi = self.cell_multi(flat_cell);
        (0..self.dim())
            .map(|a| self.boxd.lo[a] + (multi[a] as f64 + 0.5) * self.spacing(a))
            .collect()
    }

    /// Flat node indices of the 2^n corners of a cell, low corner first,
    /// ordered by corner bit pattern (axis 1 = bit 0).
    pub fn cell_corner_nodes(&self, flat_cell: usize) -> Vec<usize> {
        let multi = self.cell_multi(flat_cell);
        let n = self.dim();
        let mut out = Vec::with_capacity(1 << n);
        for bits in 0..(1usize << n) {
            let corner: Vec<usize> = (0..n).map(|a| multi[a] + ((bits >> a) & 1)).collect();
            out.push(self.node_index(&corner));
        }
        out
    }

    /// Gradient stencil weight of corner `bits` on axis `axis`:
    /// the cell-center gradient is the average of forward differences over the
    /// 2^(n-1) node pairs straddling the cell on that axis.
    pub fn corner_gradient_weight(&self, bits: usize, axis: usize) -> f64 {
        let n = self.dim();
        let sign = if (bits >> axis) & 1 == 1 { 1.0 } else { -1.0 };
        sign / ((1usize << (n - 1)) as f64 * self.spacing(axis))
    }
}

pub fn unravel(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(shape.len());
    for &s in shape {
        out.push(flat % s);
        flat /= s;
    }
    out
}

pub fn ravel(multi: &[usize], shape: &[usize]) -> usize {
    let mut flat = 0;
    for i in (0..shape.len()).rev() {
        debug_assert!(multi[i] < shape[i]);
        flat = flat * shape[i] + multi[i];
    }
    flat
}

/// Nodal values of a scalar function on a grid.
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(XfgError::argument(format!(
                "field has {} values for {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(XfgError::argument("field contains non-finite values"));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values: Vec<f64> = (0..grid.node_count())
            .map(|i| f(&grid.node_coords(i)))
            .collect();
        ScalarField::from_values(grid, values)
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.node_count();
        ScalarField {
            grid,
            values: vec![0.0; n],
        }
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

    /// Multilinear interpolation value at a cell center = corner average.
    pub fn cell_average(&self, flat_cell: usize) -> f64 {
        let corners = self.grid.cell_corner_nodes(flat_cell);
        let s: f64 = corners.iter().map(|&c| self.values[c]).sum();
        s / corners.len() as f64
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn sub(&self, other: &ScalarField) -> Result<ScalarField> {
        if self.grid != other.grid {
            return Err(XfgError::argument("field subtraction on mismatched grids"));
        }
        Ok(ScalarField {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(other.values.iter())
                .map(|(a, b)| a - b)
                .collect(),
        })
    }
}

/// One fixed-size vector per cell center (dimension m or n).
#[derive(Debug, Clone)]
pub struct VectorSampleField {
    grid: Grid,
    dim: usize,
    values: Vec<f64>, // cell-major, component-minor
}

impl VectorSampleField {
    pub fn from_values(grid: Grid, dim: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cell_count() * dim {
            return Err(XfgError::argument("vector field value count mismatch"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(XfgError::argument("vector field contains non-finite values"));
        }
        Ok(VectorSampleField { grid, dim, values })
    }

    pub fn from_fn(grid: Grid, dim: usize, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.cell_count() * dim);
        for c in 0..grid.cell_count() {
            let v = f(&grid.cell_center(c));
            if v.len() != dim {
                return Err(XfgError::argument("sample dimension mismatch"));
            }
            values.extend(v);
        }
        VectorSampleField::from_values(grid, dim, values)
    }

    pub fn zeros(grid: Grid, dim: usize) -> Self {
        let len = grid.cell_count() * dim;
        VectorSampleField {
            grid,
            dim,
            values: vec![0.0; len],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, flat_cell: usize) -> &[f64] {
        &self.values[flat_cell * self.dim..(flat_cell + 1) * self.dim]
    }

    pub fn get_mut(&mut self, flat_cell: usize) -> &mut [f64] {
        &mut self.values[flat_cell * self.dim..(flat_cell + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// A sub-box of a grid snapped to cell boundaries; kept as half-open cell
/// index ranges per axis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subdomain {
    cell_lo: Vec<usize>,
    cell_hi: Vec<usize>, // exclusive
}

impl Subdomain {
    /// The whole grid.
    pub fn whole(grid: &Grid) -> Subdomain {
        Subdomain {
            cell_lo: vec![0; grid.dim()],
            cell_hi: grid.cells_per_axis(),
        }
    }

    /// Snaps `target` to cell boundaries, approximating from inside
    /// (lo rounds up, hi rounds down, with a half-spacing tolerance for
    /// boundaries that already sit on the lattice).
    pub fn snap(grid: &Grid, target: &BoxDomain) -> Result<Subdomain> {
        if target.dim() != grid.dim() {
            return Err(XfgError::argument("subdomain dimension mismatch"));
        }
        let mut cell_lo = Vec::new();
        let mut cell_hi = Vec::new();
        for a in 0..grid.dim() {
            let h = grid.spacing(a);
            let cells = grid.res()[a] - 1;
            let lo_f = (target.lo[a] - grid.domain().lo[a]) / h;
            let hi_f = (target.hi[a] - grid.domain().lo[a]) / h;
            let lo = lo_f.round();
            let lo = if (lo_f - lo).abs() <= 1e-9 { lo } else { lo_f.ceil() };
            let hi = hi_f.round();
            let hi = if (hi_f - hi).abs() <= 1e-9 { hi } else { hi_f.floor() };
            let lo = lo.max(0.0) as usize;
            let hi = (hi.min(cells as f64)) as usize;
            if hi <= lo {
                return Err(XfgError::argument(format!(
                    "subdomain is empty after snapping on axis {}",
                    a + 1
                )));
            }
            cell_lo.push(lo);
            cell_hi.push(hi);
        }
        Ok(Subdomain { cell_lo, cell_hi })
    }

    pub fn cell_lo(&self) -> &[usize] {
        &self.cell_lo
    }

    pub fn cell_hi(&self) -> &[usize] {
        &self.cell_hi
    }

    pub fn cell_count(&self) -> usize {
        (0..self.cell_lo.len())
            .map(|a| self.cell_hi[a] - self.cell_lo[a])
            .product()
    }

    pub fn contains_cell_multi(&self, multi: &[usize]) -> bool {
        multi
            .iter()
            .zip(self.cell_lo.iter().zip(self.cell_hi.iter()))
            .all(|(c, (lo, hi))| *c >= *lo && *c < *hi)
    }

    /// Flat cell indices (on the parent grid) inside the subdomain,
    /// in deterministic lexicographic order.
    pub fn cells(&self, grid: &Grid) -> Vec<usize> {
        let shape: Vec<usize> = (0..self.cell_lo.len())
            .map(|a| self.cell_hi[a] - self.cell_lo[a])
            .collect();
        let count: usize = shape.iter().product();
        (0..count)
            .map(|local| {
                let rel = unravel(local, &shape);
                let multi: Vec<usize> = rel
                    .iter()
                    .zip(self.cell_lo.iter())
                    .map(|(r, lo)| r + lo)
                    .collect();
                grid.cell_index(&multi)
            })
            .collect()
    }

    /// The exact box covered by the snapped cells.
    pub fn as_box(&self, grid: &Grid) -> BoxDomain {
        let lo: Vec<f64> = (0..grid.dim())
            .map(|a| grid.domain().lo[a] + self.cell_lo[a] as f64 * grid.spacing(a))
            .collect();
        let hi: Vec<f64> = (0..grid.dim())
            .map(|a| grid.domain().lo[a] + self.cell_hi[a] as f64 * grid.spacing(a))
            .collect();
        BoxDomain::new(lo, hi).expect("snapped box is nonempty")
    }

    pub fn volume(&self, grid: &Grid) -> f64 {
        self.cell_count() as f64 * grid.cell_volume()
    }

    /// True when the two subdomains share no cell.
    pub fn disjoint(&self, other: &Subdomain) -> bool {
        (0..self.cell_lo.len())
            .any(|a| self.cell_hi[a] <= other.cell_lo[a] || other.cell_hi[a] <= self.cell_lo[a])
    }

    /// Node index ranges covered by the subdomain (inclusive of both faces).
    pub fn node_range(&self) -> (Vec<usize>, Vec<usize>) {
        (self.cell_lo.clone(), self.cell_hi.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid2() -> Grid {
        Grid::new(BoxDomain::unit(2), vec![5, 3]).unwrap()
    }

    #[test]
    fn indexing_round_trips() {
        let g = grid2();
        assert_eq!(g.node_count(), 15);
        assert_eq!(g.cell_count(), 8);
        for i in 0..g.node_count() {
            assert_eq!(g.node_index(&g.node_multi(i)), i);
        }
        let x = g.node_coords(g.node_index(&[4, 2]));
        assert_eq!(x, vec![1.0, 1.0]);
    }

    #[test]
    fn cell_geometry() {
        let g = grid2();
        assert_eq!(g.spacing(0), 0.25);
        assert_eq!(g.spacing(1), 0.5);
        assert_eq!(g.cell_volume(), 0.125);
        let c = g.cell_index(&[0, 0]);
        assert_eq!(g.cell_center(c), vec![0.125, 0.25]);
        let corners = g.cell_corner_nodes(c);
        assert_eq!(corners.len(), 4);
        assert_eq!(corners[0], g.node_index(&[0, 0]));
        assert_eq!(corners[3], g.node_index(&[1, 1]));
    }

    #[test]
    fn gradient_weights_reproduce_linear() {
        // sum_k w_d(k) * u_k == d-th slope for u = <a, x>
        let g = Grid::new(BoxDomain::unit(3), vec![4, 4, 4]).unwrap();
        let a = [2.0, -1.0, 0.5];
        let u = ScalarField::from_fn(g.clone(), |x| {
            a.iter().zip(x.iter()).map(|(ai, xi)| ai * xi).sum()
        })
        .unwrap();
        let cell = g.cell_index(&[1, 2, 0]);
        let corners = g.cell_corner_nodes(cell);
        for axis in 0..3 {
            let slope: f64 = corners
                .iter()
                .enumerate()
                .map(|(bits, &node)| g.corner_gradient_weight(bits, axis) * u.values()[node])
                .sum();
            assert!((slope - a[axis]).abs() < 1e-13);
        }
    }

    #[test]
    fn subdomain_snapping() {
        let g = Grid::new(BoxDomain::unit(2), vec![5, 5]).unwrap(); // h = 0.25
        let s = Subdomain::snap(&g, &BoxDomain::new(vec![0.2, 0.0], vec![0.8, 1.0]).unwrap())
            .unwrap();
        // 0.2 -> cell boundary 0.25 (inside), 0.8 -> 0.75
        assert_eq!(s.cell_lo(), &[1, 0]);
        assert_eq!(s.cell_hi(), &[3, 4]);
        assert_eq!(s.cell_count(), 8);
        let b = s.as_box(&g);
        assert_eq!(b.lo, vec![0.25, 0.0]);
        assert_eq!(b.hi, vec![0.75, 1.0]);
        // exact boundaries snap to themselves
        let s2 = Subdomain::snap(&g, &BoxDomain::new(vec![0.25, 0.25], vec![0.75, 0.75]).unwrap())
            .unwrap();
        assert_eq!(s2.cell_lo(), &[1, 1]);
        assert_eq!(s2.cell_hi(), &[3, 3]);
        // empty after snapping
        assert!(Subdomain::snap(&g, &BoxDomain::new(vec![0.3, 0.3], vec![0.45, 0.45]).unwrap()).is_err());
    }

    #[test]
    fn subdomain_cells_and_disjointness() {
        let g = Grid::new(BoxDomain::unit(2), vec![3, 3]).unwrap();
        let left = Subdomain::snap(&g, &BoxDomain::new(vec![0.0, 0.0], vec![0.5, 1.0]).unwrap())
            .unwrap();
        let right = Subdomain::snap(&g, &BoxDomain::new(vec![0.5, 0.0], vec![1.0, 1.0]).unwrap())
            .unwrap();
        assert!(left.disjoint(&right));
        let whole = Subdomain::whole(&g);
        assert_eq!(whole.cell_count(), 4);
        let mut all: Vec<usize> = left.cells(&g);
        all.extend(right.cells(&g));
        all.sort_unstable();
        assert_eq!(all, whole.cells(&g));
    }
}
