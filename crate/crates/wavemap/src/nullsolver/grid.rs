use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::TargetManifold;

/// Uniform lattice in `(u, v)`.
///
/// Node `(i, j)` sits at `u = origin + i h`, `v = origin + j h`, so the
/// diagonal `i = j` is the `t = 0` line. Rows of constant `d = i - j` are
/// constant-time slices `t = d h / 2`; the lattice keeps rows with
/// `d_min <= d <= d_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullGrid {
    pub h: f64,
    pub origin: f64,
    pub n: usize,
    pub d_min: i64,
    pub d_max: i64,
}

impl NullGrid {
    pub fn new(h: f64, origin: f64, n: usize, d_min: i64, d_max: i64) -> Result<Self> {
        if !(h > 0.0) || n == 0 {
            return Err(Error::InvalidParameter("grid needs h > 0 and n > 0".into()));
        }
        let lim = n as i64 - 1;
        if d_min > 0 || d_max < 0 || -d_min > lim || d_max > lim {
            return Err(Error::InvalidParameter(format!(
                "row range [{d_min}, {d_max}] invalid for n = {n}"
            )));
        }
        Ok(Self { h, origin, n, d_min, d_max })
    }

    /// Full square `[origin, origin + (n-1) h]²`.
    pub fn square(h: f64, origin: f64, n: usize) -> Result<Self> {
        let l = n as i64 - 1;
        Self::new(h, origin, n, -l, l)
    }

    pub fn is_square(&self) -> bool {
        let l = self.n as i64 - 1;
        self.d_min == -l && self.d_max == l
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.h
    }

    pub fn u(&self, i: usize) -> f64 {
        self.coord(i)
    }

    pub fn v(&self, j: usize) -> f64 {
        self.coord(j)
    }

    pub fn xt(&self, i: usize, j: usize) -> (f64, f64) {
        let (u, v) = (self.u(i), self.v(j));
        (0.5 * (u + v), 0.5 * (u - v))
    }

    pub fn row_len(&self, d: i64) -> usize {
        self.n - d.unsigned_abs() as usize
    }

    /// First `j` of row `d`.
    pub fn row_j_start(&self, d: i64) -> usize {
        if d < 0 {
            (-d) as usize
        } else {
            0
        }
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        let d = i as i64 - j as i64;
        i < self.n && j < self.n && d >= self.d_min && d <= self.d_max
    }

    pub fn node_count(&self) -> usize {
        (self.d_min..=self.d_max).map(|d| self.row_len(d)).sum()
    }

    pub fn row_offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity((self.d_max - self.d_min + 2) as usize);
        let mut acc = 0;
        for d in self.d_min..=self.d_max {
            off.push(acc);
            acc += self.row_len(d);
        }
        off.push(acc);
        off
    }

    /// Time of row `d`.
    pub fn row_time(&self, d: i64) -> f64 {
        0.5 * d as f64 * self.h
    }

    /// Same lattice nodes, restricted to a smaller row range.
    pub fn restrict(&self, d_min: i64, d_max: i64) -> Result<Self> {
        Self::new(self.h, self.origin, self.n, d_min.max(self.d_min), d_max.min(self.d_max))
    }
}

/// Scheme bookkeeping stored alongside a field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub scheme_order: u32,
    pub projection: bool,
    pub label: String,
}

impl Default for FieldMeta {
    fn default() -> Self {
        Self { scheme_order: 2, projection: false, label: String::new() }
    }
}

/// Manifold-valued samples on a [`NullGrid`].
#[derive(Debug, Clone)]
pub struct GridField {
    pub grid: NullGrid,
    pub dim: usize,
    pub target: TargetManifold,
    pub meta: FieldMeta,
    values: Vec<f64>,
    offsets: Vec<usize>,
}

impl GridField {
    pub fn zeros(grid: NullGrid, target: TargetManifold, meta: FieldMeta) -> Self {
        let dim = target.chart_dim();
        let offsets = grid.row_offsets();
        let values = vec![0.0; grid.node_count() * dim];
        Self { grid, dim, target, meta, values, offsets }
    }

    pub fn from_values(
        grid: NullGrid,
        target: TargetManifold,
        meta: FieldMeta,
        values: Vec<f64>,
    ) -> Result<Self> {
        let dim = target.chart_dim();
        if values.len() != grid.node_count() * dim {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                grid.node_count() * dim,
                values.len()
            )));
        }
        let offsets = grid.row_offsets();
        Ok(Self { grid, dim, target, meta, values, offsets })
    }

    /// Samples `f(u, v)` at every node.
    pub fn from_fn<F>(grid: NullGrid, target: TargetManifold, meta: FieldMeta, f: F) -> Self
    where
        F: Fn(f64, f64, &mut [f64]),
    {
        let mut field = Self::zeros(grid, target, meta);
        let dim = field.dim;
        for d in field.grid.d_min..=field.grid.d_max {
            let js = field.grid.row_j_start(d);
            for p in 0..field.grid.row_len(d) {
                let j = js + p;
                let i = (j as i64 + d) as usize;
                let (u, v) = (field.grid.u(i), field.grid.v(j));
                let k = field.offsets[(d - field.grid.d_min) as usize] + p;
                f(u, v, &mut field.values[k * dim..(k + 1) * dim]);
            }
        }
        field
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

    pub fn node_index(&self, i: usize, j: usize) -> Option<usize> {
        if !self.grid.contains(i, j) {
            return None;
        }
        let d = i as i64 - j as i64;
        let p = j - self.grid.row_j_start(d);
        Some(self.offsets[(d - self.grid.d_min) as usize] + p)
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&[f64]> {
        self.node_index(i, j).map(|k| &self.values[k * self.dim..(k + 1) * self.dim])
    }

    /// Value at `(i, j)`; panics when the node is outside the lattice.
    pub fn at(&self, i: usize, j: usize) -> &[f64] {
        self.get(i, j).expect("node outside lattice")
    }

    pub fn set(&mut self, i: usize, j: usize, val: &[f64]) {
        let k = self.node_index(i, j).expect("node outside lattice");
        self.values[k * self.dim..(k + 1) * self.dim].copy_from_slice(val);
    }

    /// Values of row `d` (flattened) and the `j` of its first node.
    pub fn row(&self, d: i64) -> (usize, &[f64]) {
        let r = (d - self.grid.d_min) as usize;
        let (a, b) = (self.offsets[r], self.offsets[r + 1]);
        (self.grid.row_j_start(d), &self.values[a * self.dim..b * self.dim])
    }

    /// Iterates `(i, j)` over all nodes in storage order.
    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let g = &self.grid;
        (g.d_min..=g.d_max).flat_map(move |d| {
            let js = g.row_j_start(d);
            (0..g.row_len(d)).map(move |p| ((js + p) as i64 + d) as usize).zip(js..)
        })
    }

    /// Central difference `φ_u` at `(i, j)` when both neighbours exist.
    pub fn d_u(&self, i: usize, j: usize) -> Option<Vec<f64>> {
        if i == 0 {
            return None;
        }
        let a = self.get(i + 1, j)?;
        let b = self.get(i - 1, j)?;
        let s = 0.5 / self.grid.h;
        Some(a.iter().zip(b).map(|(x, y)| (x - y) * s).collect())
    }

    /// Central difference `φ_v` at `(i, j)`.
    pub fn d_v(&self, i: usize, j: usize) -> Option<Vec<f64>> {
        if j == 0 {
            return None;
        }
        let a = self.get(i, j + 1)?;
        let b = self.get(i, j - 1)?;
        let s = 0.5 / self.grid.h;
        Some(a.iter().zip(b).map(|(x, y)| (x - y) * s).collect())
    }

    /// Central mixed difference `φ_uv` at `(i, j)` over a `2h` stencil.
    pub fn d_uv(&self, i: usize, j: usize) -> Option<Vec<f64>> {
        if i == 0 || j == 0 {
            return None;
        }
        let pp = self.get(i + 1, j + 1)?;
        let pm = self.get(i + 1, j - 1)?;
        let mp = self.get(i - 1, j + 1)?;
        let mm = self.get(i - 1, j - 1)?;
        let s = 0.25 / (self.grid.h * self.grid.h);
        Some((0..self.dim).map(|k| (pp[k] - pm[k] - mp[k] + mm[k]) * s).collect())
    }

    /// Values of the four corners of the cell with lower-left node `(i, j)`.
    pub fn cell(&self, i: usize, j: usize) -> Option<[&[f64]; 4]> {
        Some([
            self.get(i, j)?,
            self.get(i + 1, j)?,
            self.get(i, j + 1)?,
            self.get(i + 1, j + 1)?,
        ])
    }

    /// Nodewise difference `self - other` on identical lattices.
    pub fn difference(&self, other: &GridField) -> Result<GridField> {
        if self.grid != other.grid || self.dim != other.dim {
            return Err(Error::GridMismatch("fields live on different lattices".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        let flat = TargetManifold::flat(self.dim)?;
        GridField::from_values(self.grid.clone(), flat, self.meta.clone(), values)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values
            .chunks(self.dim)
            .map(|c| c.iter().map(|a| a * a).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Same samples reinterpreted with another target of equal dimension.
    pub fn with_target(mut self, target: TargetManifold) -> Result<Self> {
        if target.chart_dim() != self.dim {
            return Err(Error::GridMismatch("target dimension differs".into()));
        }
        self.target = target;
        Ok(self)
    }

    /// Restriction to the rows `d_min..=d_max`.
    pub fn restrict_rows(&self, d_min: i64, d_max: i64) -> Result<GridField> {
        let grid = self.grid.restrict(d_min, d_max)?;
        let mut out = GridField::zeros(grid.clone(), self.target.clone(), self.meta.clone());
        for d in grid.d_min..=grid.d_max {
            let (_, src) = self.row(d);
            let r = (d - grid.d_min) as usize;
            let a = out.offsets[r] * self.dim;
            out.values[a..a + src.len()].copy_from_slice(src);
        }
        Ok(out)
    }
}

/// Values attached to lattice cells (forcing terms, mixed differences).
///
/// Cell `(i, j)` has corners `(i, j)`, `(i+1, j)`, `(i, j+1)`, `(i+1, j+1)`;
/// it is stored when all four corners are lattice nodes.
#[derive(Debug, Clone)]
pub struct CellField {
    pub grid: NullGrid,
    pub dim: usize,
    values: Vec<f64>,
    offsets: Vec<usize>,
}

impl CellField {
    pub fn zeros(grid: NullGrid, dim: usize) -> Self {
        let (lo, hi) = Self::cell_row_range(&grid);
        let mut offsets = Vec::new();
        let mut acc = 0;
        if grid.n >= 2 {
            for e in lo..=hi {
                offsets.push(acc);
                acc += grid.n - 1 - e.unsigned_abs() as usize;
            }
        }
        offsets.push(acc);
        Self { grid, dim, values: vec![0.0; acc * dim], offsets }
    }

    fn cell_row_range(grid: &NullGrid) -> (i64, i64) {
        (grid.d_min + 1, grid.d_max - 1)
    }

    fn index(&self, i: usize, j: usize) -> Option<usize> {
        let e = i as i64 - j as i64;
        let (lo, hi) = Self::cell_row_range(&self.grid);
        if e < lo || e > hi || i + 1 >= self.grid.n || j + 1 >= self.grid.n {
            return None;
        }
        let js = if e < 0 { (-e) as usize } else { 0 };
        Some(self.offsets[(e - lo) as usize] + j - js)
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&[f64]> {
        self.index(i, j).map(|k| &self.values[k * self.dim..(k + 1) * self.dim])
    }

    pub fn set(&mut self, i: usize, j: usize, val: &[f64]) {
        let k = self.index(i, j).expect("cell outside lattice");
        self.values[k * self.dim..(k + 1) * self.dim].copy_from_slice(val);
    }

    /// Iterates cells `(i, j)` row by row.
    pub fn cells(&self) -> Vec<(usize, usize)> {
        let (lo, hi) = Self::cell_row_range(&self.grid);
        let mut out = Vec::new();
        for e in lo..=hi {
            let js = if e < 0 { (-e) as usize } else { 0 };
            for p in 0..(self.grid.n - 1 - e.unsigned_abs() as usize) {
                let j = js + p;
                out.push(((j as i64 + e) as usize, j));
            }
        }
        out
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Values in the order of [`CellField::cells`].
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn from_values(grid: NullGrid, dim: usize, values: Vec<f64>) -> Result<Self> {
        let mut out = Self::zeros(grid, dim);
        if out.values.len() != values.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} cell values, got {}",
                out.values.len(),
                values.len()
            )));
        }
        out.values = values;
        Ok(out)
    }

    /// Cell-centred mixed differences `(φ11 - φ10 - φ01 + φ00) / h²`.
    pub fn mixed_difference(field: &GridField) -> CellField {
        let mut out = CellField::zeros(field.grid.clone(), field.dim);
        let h2 = field.grid.h * field.grid.h;
        let mut buf = vec![0.0; field.dim];
        for (i, j) in out.cells() {
            let [p00, p10, p01, p11] = field.cell(i, j).expect("cell corners");
            for k in 0..field.dim {
                buf[k] = ((p11[k] - p10[k]) - (p01[k] - p00[k])) / h2;
            }
            out.set(i, j, &buf);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_layout() {
        let g = NullGrid::new(0.1, 0.0, 6, -2, 3).unwrap();
        assert_eq!(g.node_count(), 4 + 5 + 6 + 5 + 4 + 3);
        let f = GridField::from_fn(g.clone(), TargetManifold::flat(2).unwrap(), FieldMeta::default(), |u, v, o| {
            o[0] = u;
            o[1] = v;
        });
        let mut count = 0;
        for (i, j) in f.nodes() {
            let p = f.at(i, j);
            assert!((p[0] - g.u(i)).abs() < 1e-15 && (p[1] - g.v(j)).abs() < 1e-15);
            count += 1;
        }
        assert_eq!(count, g.node_count());
        assert!(f.get(5, 1).is_none());
        assert!(f.get(1, 4).is_none());
        assert!(f.get(1, 3).is_some());
    }

    #[test]
    fn cell_indexing_covers_all_cells() {
        let g = NullGrid::new(0.1, 0.0, 7, -3, 2).unwrap();
        let c = CellField::zeros(g.clone(), 1);
        let cells = c.cells();
        assert_eq!(cells.len() * c.dim, c.values().len());
        for (k, &(i, j)) in cells.iter().enumerate() {
            assert_eq!(c.index(i, j), Some(k));
            for (a, b) in [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)] {
                assert!(g.contains(a, b));
            }
        }
    }
}
