//! Conformal compactification, asymptotic free states for compactly
//! supported data, scattering defects and concentration profiles.

use std::f64::consts::FRAC_PI_2;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::conservation::map_cell_rows;
use crate::error::{invalid, Error, Result};
use crate::geometry::TargetManifold;
use crate::norms::l11_norm;
use crate::nullsolver::{solve_on, strip_lattice, CauchyData, FieldMeta, GridField, NullGrid, SolveOptions};
use crate::oracles::catmull_rom;

fn catmull_weights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ]
}

fn node_or_ghost(field: &GridField, i: i64, j: i64, out: &mut [f64]) -> Option<()> {
    let last = field.grid.n as i64 - 1;
    let (ci, cj) = (i.clamp(0, last), j.clamp(0, last));
    if ci == i && cj == j {
        out.copy_from_slice(field.get(i as usize, j as usize)?);
        return Some(());
    }
    // quadratic extrapolation across the lattice edge
    let (di, dj) = ((ci - i).signum(), (cj - j).signum());
    let mut acc = vec![0.0; field.dim];
    for (c, w) in [(0, 3.0), (1, -3.0), (2, 1.0)] {
        let p = field.get((ci + c * di) as usize, (cj + c * dj) as usize)?;
        for m in 0..field.dim {
            acc[m] += w * p[m];
        }
    }
    out.copy_from_slice(&acc);
    Some(())
}

/// Bicubic Catmull-Rom interpolation in `(u, v)`; `None` when the stencil
/// leaves the stored nodes or the point leaves the lattice.
pub fn cubic_interpolate(field: &GridField, u: f64, v: f64) -> Option<Vec<f64>> {
    let g = &field.grid;
    let last = (g.n - 1) as f64;
    let a = (u - g.origin) / g.h;
    let b = (v - g.origin) / g.h;
    let eps = 1e-9;
    if !(a >= -eps && a <= last + eps && b >= -eps && b <= last + eps) {
        return None;
    }
    let i0 = (a.floor().max(0.0) as usize).min(g.n.saturating_sub(2));
    let j0 = (b.floor().max(0.0) as usize).min(g.n.saturating_sub(2));
    let (wa, wb) = (catmull_weights(a - i0 as f64), catmull_weights(b - j0 as f64));
    let dim = field.dim;
    let mut out = vec![0.0; dim];
    let mut p = vec![0.0; dim];
    for (q, wq) in wa.iter().enumerate() {
        for (r, wr) in wb.iter().enumerate() {
            let w = wq * wr;
            if w == 0.0 {
                continue;
            }
            node_or_ghost(field, i0 as i64 + q as i64 - 1, j0 as i64 + r as i64 - 1, &mut p)?;
            for m in 0..dim {
                out[m] += w * p[m];
            }
        }
    }
    Some(out)
}

/// Samples of `Φ(U, V)` on a square lattice over `[-L, L]²`, `L < π/2`.
#[derive(Debug, Clone)]
pub struct CompactifiedField {
    pub field: GridField,
    pub half_width: f64,
}

impl CompactifiedField {
    pub fn value_at(&self, big_u: f64, big_v: f64) -> Result<Vec<f64>> {
        cubic_interpolate(&self.field, big_u, big_v).ok_or_else(|| {
            Error::InvalidParameter(format!("({big_u}, {big_v}) outside the compactified lattice"))
        })
    }
}

fn outside(u: f64, v: f64) -> Error {
    Error::InvalidParameter(format!("query ({u}, {v}) outside the source field"))
}

fn compact_grid(n: usize, half_width: f64) -> Result<NullGrid> {
    if n < 4 || !(half_width > 0.0 && half_width < FRAC_PI_2) {
        return invalid("compactified lattice needs n ≥ 4 and 0 < L < π/2");
    }
    NullGrid::square(2.0 * half_width / (n - 1) as f64, -half_width, n)
}

/// `Φ(U, V) = φ(tan U, tan V)` for a closed-form `φ`.
pub fn compactify_fn<F>(n: usize, half_width: f64, target: &TargetManifold, f: F) -> Result<CompactifiedField>
where
    F: Fn(f64, f64, &mut [f64]),
{
    let grid = compact_grid(n, half_width)?;
    let meta = FieldMeta { scheme_order: 0, projection: false, label: "compactified".into() };
    let field = GridField::from_fn(grid, target.clone(), meta, |bu, bv, o| f(bu.tan(), bv.tan(), o));
    Ok(CompactifiedField { field, half_width })
}

/// Pullback of a lattice field by `(tan U, tan V)` with bicubic
/// interpolation; embedded targets are retracted afterwards.
pub fn compactify(phi: &GridField, n: usize, half_width: f64) -> Result<CompactifiedField> {
    let grid = compact_grid(n, half_width)?;
    let mut field = GridField::zeros(grid, phi.target.clone(), phi.meta.clone());
    field.meta.label = "compactified".into();
    let nodes: Vec<(usize, usize)> = field.nodes().collect();
    for (i, j) in nodes {
        let (u, v) = (field.grid.u(i).tan(), field.grid.v(j).tan());
        let mut p = cubic_interpolate(phi, u, v).ok_or_else(|| outside(u, v))?;
        phi.target.retract_in_place(&mut p);
        field.set(i, j, &p);
    }
    Ok(CompactifiedField { field, half_width })
}

/// Inverse pullback by `(arctan u, arctan v)` onto `grid`.
pub fn decompactify(big: &CompactifiedField, grid: &NullGrid) -> Result<GridField> {
    let src = &big.field;
    let mut field = GridField::zeros(grid.clone(), src.target.clone(), src.meta.clone());
    field.meta.label = "decompactified".into();
    let nodes: Vec<(usize, usize)> = field.nodes().collect();
    for (i, j) in nodes {
        let (bu, bv) = (grid.u(i).atan(), grid.v(j).atan());
        let mut p = cubic_interpolate(src, bu, bv).ok_or_else(|| outside(bu, bv))?;
        src.target.retract_in_place(&mut p);
        field.set(i, j, &p);
    }
    Ok(field)
}

/// Residuals of the exact finite-time resolution for data supported in
/// `[-T, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolutionReport {
    pub radius: f64,
    pub h: f64,
    /// `sup |D_u φ|` over edges with `|u| ≥ T`.
    pub strip_u: f64,
    /// `sup |D_v φ|` over edges with `|v| ≥ T`.
    pub strip_v: f64,
    /// Diameter of the values on each quadrant `(±u > T, ±v > T)`, ordered
    /// `(+,+), (+,-), (-,+), (-,-)`.
    pub quadrant_variation: [f64; 4],
}

impl ResolutionReport {
    pub fn max_residual(&self) -> f64 {
        self.quadrant_variation.iter().fold(self.strip_u.max(self.strip_v), |m, v| m.max(*v))
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn outer(x: f64, radius: f64, h: f64) -> bool {
    x.abs() >= radius - 1e-9 * h
}

/// Checks the data support and measures the strip and quadrant residuals.
pub fn free_resolution_check(phi: &GridField, data: &CauchyData, radius: f64) -> Result<ResolutionReport> {
    check_compact_support(data, radius)?;
    let g = &phi.grid;
    let h = g.h;
    let mut strip_u: f64 = 0.0;
    let mut strip_v: f64 = 0.0;
    let mut quad: [Option<(Vec<f64>, f64)>; 4] = Default::default();
    for (i, j) in phi.nodes() {
        let (u, v) = (g.u(i), g.v(j));
        let p = phi.at(i, j);
        if i + 1 < g.n && outer(u, radius, h) && outer(g.u(i + 1), radius, h) && u.signum() == g.u(i + 1).signum() {
            if let Some(q) = phi.get(i + 1, j) {
                strip_u = strip_u.max(dist(p, q) / h);
            }
        }
        if j + 1 < g.n && outer(v, radius, h) && outer(g.v(j + 1), radius, h) && v.signum() == g.v(j + 1).signum() {
            if let Some(q) = phi.get(i, j + 1) {
                strip_v = strip_v.max(dist(p, q) / h);
            }
        }
        if outer(u, radius, h) && outer(v, radius, h) {
            let k = match (u > 0.0, v > 0.0) {
                (true, true) => 0,
                (true, false) => 1,
                (false, true) => 2,
                (false, false) => 3,
            };
            match &mut quad[k] {
                None => quad[k] = Some((p.to_vec(), 0.0)),
                Some((anchor, diam)) => *diam = diam.max(dist(anchor, p)),
            }
        }
    }
    // the diameter is bounded by twice the largest distance to one anchor
    let quadrant_variation = quad.map(|q| q.map_or(0.0, |(_, d)| 2.0 * d));
    Ok(ResolutionReport { radius, h, strip_u, strip_v, quadrant_variation })
}

/// Rejects data whose `f'` or `g` does not vanish outside `[-T, T]`.
pub fn check_compact_support(data: &CauchyData, radius: f64) -> Result<()> {
    if !(radius >= 0.0) {
        return invalid("support radius must be nonnegative");
    }
    let tol = 1e-12;
    let mut fp = vec![0.0; data.dim];
    for k in 0..data.len() {
        let x = data.x(k);
        if x.abs() <= radius + 1e-9 * data.spacing {
            continue;
        }
        data.f_prime(k as i64, &mut fp);
        let big = fp.iter().chain(data.g(k)).any(|a| a.abs() > tol);
        let near_edge = (x.abs() - radius) < 2.5 * data.spacing;
        if big && !near_edge {
            return invalid(format!("data not compactly supported in [-{radius}, {radius}]: nonzero at x = {x}"));
        }
    }
    Ok(())
}

/// A free solution `F(u) + G(v)` given by its two profiles on the lattice
/// coordinates, extended by constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeState {
    pub origin: f64,
    pub h: f64,
    pub dim: usize,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
}

impl FreeState {
    pub fn len(&self) -> usize {
        self.f.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }

    fn profile_at(&self, prof: &[f64], x: f64, out: &mut [f64]) {
        let n = self.len();
        let k = ((x - self.origin) / self.h).round().clamp(0.0, (n - 1) as f64) as usize;
        let on_node = ((x - self.origin) / self.h - k as f64).abs() < 1e-9;
        for m in 0..self.dim {
            if on_node {
                out[m] = prof[k * self.dim + m];
            } else {
                let column: Vec<f64> = (0..n).map(|q| prof[q * self.dim + m]).collect();
                out[m] = catmull_rom(self.origin, self.h, &column, x).0;
            }
        }
    }

    pub fn value(&self, u: f64, v: f64) -> Vec<f64> {
        let mut a = vec![0.0; self.dim];
        let mut b = vec![0.0; self.dim];
        self.profile_at(&self.f, u, &mut a);
        self.profile_at(&self.g, v, &mut b);
        a.iter().zip(&b).map(|(x, y)| x + y).collect()
    }

    /// The free solution on `grid` in the flat ambient target.
    pub fn to_field(&self, grid: &NullGrid) -> Result<GridField> {
        let meta = FieldMeta { scheme_order: 0, projection: false, label: "free_state".into() };
        Ok(GridField::from_fn(grid.clone(), TargetManifold::flat(self.dim)?, meta, |u, v, o| {
            o.copy_from_slice(&self.value(u, v))
        }))
    }

    /// `½ (∫|F'|² du + ∫|G'|² dv)` by differences.
    pub fn energy(&self) -> f64 {
        let d = self.dim;
        let sq = |p: &[f64]| -> f64 {
            p.chunks(d).collect::<Vec<_>>().windows(2).map(|w| dist(w[0], w[1]).powi(2)).sum::<f64>() / self.h
        };
        0.5 * (sq(&self.f) + sq(&self.g))
    }

    /// JSON header line, then `coord,F..,G..` rows.
    pub fn write_profiles<W: Write>(&self, mut w: W) -> Result<()> {
        let header = serde_json::json!({ "origin": self.origin, "h": self.h, "dim": self.dim, "len": self.len() });
        writeln!(w, "{header}")?;
        let mut cols = vec!["coord".to_string()];
        cols.extend((0..self.dim).map(|m| format!("f{m}")));
        cols.extend((0..self.dim).map(|m| format!("g{m}")));
        writeln!(w, "{}", cols.join(","))?;
        for k in 0..self.len() {
            let mut row = vec![format!("{}", self.origin + k as f64 * self.h)];
            row.extend(self.f[k * self.dim..(k + 1) * self.dim].iter().map(|a| format!("{a:e}")));
            row.extend(self.g[k * self.dim..(k + 1) * self.dim].iter().map(|a| format!("{a:e}")));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Outgoing (`t → +∞`) and incoming (`t → -∞`) free states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringStates {
    pub radius: f64,
    pub plus: FreeState,
    pub minus: FreeState,
}

/// Reads `φ(·, v₀)` (`along_u`) or `φ(u₀, ·)` with constant extension past
/// the stored nodes.
fn read_line(phi: &GridField, fixed: usize, along_u: bool) -> Vec<f64> {
    let n = phi.grid.n;
    let dim = phi.dim;
    let mut vals: Vec<Option<&[f64]>> =
        (0..n).map(|k| if along_u { phi.get(k, fixed) } else { phi.get(fixed, k) }).collect();
    let first = vals.iter().position(Option::is_some).expect("line has a node");
    let last = vals.iter().rposition(Option::is_some).expect("line has a node");
    let (lo, hi) = (vals[first], vals[last]);
    for (k, slot) in vals.iter_mut().enumerate() {
        if k < first {
            *slot = lo;
        } else if k > last {
            *slot = hi;
        }
    }
    let mut out = Vec::with_capacity(n * dim);
    for s in vals {
        out.extend_from_slice(s.expect("filled"));
    }
    out
}

/// Free states of a solution whose data has `f'`, `g` supported in
/// `[-T, T]`: `Φ₊ = φ(u, -T) + φ(T, v) - φ(T, -T)` and
/// `Φ₋ = φ(u, T) + φ(-T, v) - φ(-T, T)`, with `±T` rounded outwards to
/// lattice lines.
pub fn scattering_states(phi: &GridField, radius: f64) -> Result<ScatteringStates> {
    let g = &phi.grid;
    let idx_hi = ((radius - g.origin) / g.h - 1e-9).ceil();
    let idx_lo = ((-radius - g.origin) / g.h + 1e-9).floor();
    if idx_lo < 0.0 || idx_hi > (g.n - 1) as f64 {
        return invalid("interaction region exceeds the computed domain");
    }
    let (hi, lo) = (idx_hi as usize, idx_lo as usize);
    if phi.get(hi, lo).is_none() || phi.get(lo, hi).is_none() {
        return invalid("interaction region exceeds the computed domain: lattice rows too short");
    }
    let state = |u_line: usize, v_line: usize| -> FreeState {
        let along_u = read_line(phi, v_line, true);
        let along_v = read_line(phi, u_line, false);
        let corner = phi.at(u_line, v_line);
        let f = along_u.chunks(phi.dim).flat_map(|p| p.iter().zip(corner).map(|(a, c)| a - c)).collect();
        FreeState { origin: g.origin, h: g.h, dim: phi.dim, f, g: along_v }
    };
    Ok(ScatteringStates { radius, plus: state(hi, lo), minus: state(lo, hi) })
}

/// Data pulled back to the compactified line: `Φ(0, X) = f(tan X)`,
/// `Φ_t(0, X) = sec²X g(tan X)`, extended by constants (zero velocity)
/// outside `(-π/2, π/2)`.
pub fn compactify_data(data: &CauchyData, spacing: f64, extent: f64) -> Result<CauchyData> {
    if !(extent > FRAC_PI_2) {
        return invalid("compactified data must extend past ±π/2");
    }
    let columns = |get: &dyn Fn(usize) -> f64| -> Vec<f64> { (0..data.len()).map(get).collect() };
    let fcols: Vec<Vec<f64>> = (0..data.dim).map(|m| columns(&|k| data.f(k)[m])).collect();
    let gcols: Vec<Vec<f64>> = (0..data.dim).map(|m| columns(&|k| data.g(k)[m])).collect();
    let (lo, hi) = (data.f(0).to_vec(), data.f(data.len() - 1).to_vec());
    CauchyData::from_fn(
        -extent,
        extent,
        spacing,
        data.dim,
        |big_x, o| {
            if big_x <= -FRAC_PI_2 {
                o.copy_from_slice(&lo);
            } else if big_x >= FRAC_PI_2 {
                o.copy_from_slice(&hi);
            } else {
                for (m, c) in fcols.iter().enumerate() {
                    o[m] = catmull_rom(data.x_min, data.spacing, c, big_x.tan()).0;
                }
            }
        },
        |big_x, o| {
            o.fill(0.0);
            if big_x.abs() < FRAC_PI_2 {
                let x = big_x.tan();
                if x > data.x_min && x < data.x_max {
                    let sec2 = 1.0 + x * x;
                    for (m, c) in gcols.iter().enumerate() {
                        o[m] = sec2 * catmull_rom(data.x_min, data.spacing, c, x).0;
                    }
                }
            }
        },
    )
}

/// Full pipeline for data on the line: compactify, evolve on the diamond
/// with lattice spacing `h`, read the states at `±π/2` and pull them back
/// to the `(u, v)` coordinates of `grid` (free states stay free under the
/// pullback).
pub fn scattering_states_compactified(
    data: &CauchyData,
    target: &TargetManifold,
    h: f64,
    grid: &NullGrid,
) -> Result<ScatteringStates> {
    // a whole number of lattice steps, so the sample count stays odd
    let extent = ((FRAC_PI_2 / h).ceil() + 4.0) * h;
    let big = compactify_data(data, 0.5 * h, extent)?;
    let (padded, lattice) = strip_lattice(&big, h, FRAC_PI_2 + 2.0 * h, FRAC_PI_2 + 2.0 * h)?;
    let phi = solve_on(&padded, &lattice, target, &SolveOptions::default())?;
    let states = scattering_states(&phi, FRAC_PI_2)?;
    let pull = |s: &FreeState| -> FreeState {
        let mut f = Vec::with_capacity(grid.n * s.dim);
        let mut g = Vec::with_capacity(grid.n * s.dim);
        let mut buf = vec![0.0; s.dim];
        for k in 0..grid.n {
            let x = grid.coord(k).atan();
            s.profile_at(&s.f, x, &mut buf);
            f.extend_from_slice(&buf);
            s.profile_at(&s.g, x, &mut buf);
            g.extend_from_slice(&buf);
        }
        FreeState { origin: grid.origin, h: grid.h, dim: s.dim, f, g }
    };
    Ok(ScatteringStates { radius: f64::INFINITY, plus: pull(&states.plus), minus: pull(&states.minus) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DefectRow {
    pub t: f64,
    pub l11: f64,
    pub h1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DefectTable {
    /// Defects against `Φ₊` at times `t ≥ 0`.
    pub plus: Vec<DefectRow>,
    /// Defects against `Φ₋` at times `-t`.
    pub minus: Vec<DefectRow>,
}

impl DefectTable {
    pub fn max_beyond(&self, t: f64) -> f64 {
        self.plus
            .iter()
            .chain(&self.minus)
            .filter(|r| r.t.abs() >= t - 1e-12)
            .map(|r| r.l11.max(r.h1))
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "side,t,l11,h1")?;
        for (side, rows) in [("plus", &self.plus), ("minus", &self.minus)] {
            for r in rows {
                writeln!(w, "{side},{},{:e},{:e}", r.t, r.l11, r.h1)?;
            }
        }
        Ok(())
    }
}

/// L^{1,1} and Ḣ¹ size of `φ - Φ±` on the cell rows nearest to each
/// requested time, in the ambient Euclidean metric.
pub fn scattering_defect(phi: &GridField, states: &ScatteringStates, times: &[f64]) -> Result<DefectTable> {
    let g = &phi.grid;
    let side = |state: &FreeState, sign: f64| -> Result<Vec<DefectRow>> {
        let free = state.to_field(g)?;
        let diff = phi.difference(&free)?;
        let rows: Vec<i64> = times.iter().map(|t| (sign * 2.0 * t / g.h).round() as i64).collect();
        let wanted: std::collections::HashSet<i64> = rows.iter().cloned().collect();
        let dim = phi.dim;
        let measured: Vec<Option<(i64, DefectRow)>> = map_cell_rows(&diff, |row| {
            if !wanted.contains(&row.e) {
                return None;
            }
            let mut tv = 0.0;
            let mut sq = 0.0;
            let mut sup: f64 = 0.0;
            for p in 0..row.ij.len() {
                let r = p * dim..(p + 1) * dim;
                let (du, dv) = (&row.du[r.clone()], &row.dv[r.clone()]);
                let wx: f64 = du.iter().zip(dv).map(|(a, b)| (a + b) * (a + b)).sum();
                let wt: f64 = du.iter().zip(dv).map(|(a, b)| (a - b) * (a - b)).sum();
                tv += g.h * (wx.sqrt() + wt.sqrt());
                sq += g.h * (wx + wt);
                sup = sup.max(row.avg[r].iter().map(|a| a * a).sum::<f64>().sqrt());
            }
            Some((row.e, DefectRow { t: row.e as f64 * 0.5 * g.h, l11: tv + sup, h1: sq.sqrt() }))
        });
        let found: Vec<(i64, DefectRow)> = measured.into_iter().flatten().collect();
        rows.iter()
            .map(|e| {
                found.iter().find(|(k, _)| k == e).map(|(_, r)| *r).ok_or_else(|| {
                    Error::InvalidParameter(format!("time {} outside the lattice interior", *e as f64 * 0.5 * g.h))
                })
            })
            .collect()
    };
    Ok(DefectTable { plus: side(&states.plus, 1.0)?, minus: side(&states.minus, -1.0)? })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowRow {
    pub delta: f64,
    /// `sup over x₀` of `∫_{|x - x₀| ≤ δ} (|f'| + |g|)`.
    pub worst_mass: f64,
    pub center: f64,
    /// `‖χ((x - x₀)/δ)(f - f(x₀), g)‖_{L^{1,1}}` at the worst window.
    pub localized_l11: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationReport {
    pub epsilon: f64,
    pub rows: Vec<WindowRow>,
    /// Largest `δ` of the grid whose worst window mass is below `ε`.
    pub localization_radius: Option<f64>,
}

impl ConcentrationReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "delta,worst_mass,center,localized_l11")?;
        for r in &self.rows {
            writeln!(w, "{},{:e},{},{:e}", r.delta, r.worst_mass, r.center, r.localized_l11)?;
        }
        Ok(())
    }
}

/// Segment masses `|f_{k+1} - f_k|_h + ½(|g_k| + |g_{k+1}|) dx`.
fn segment_masses(data: &CauchyData, target: &TargetManifold) -> Result<Vec<f64>> {
    let dim = data.dim;
    let mut mid = vec![0.0; dim];
    let mut diff = vec![0.0; dim];
    let glen = |k: usize, base: &[f64]| target.metric_length(base, data.g(k));
    let mut out = Vec::with_capacity(data.len().saturating_sub(1));
    for k in 0..data.len().saturating_sub(1) {
        let (a, b) = (data.f(k), data.f(k + 1));
        for m in 0..dim {
            mid[m] = 0.5 * (a[m] + b[m]);
            diff[m] = b[m] - a[m];
        }
        out.push(target.metric_length(&mid, &diff)? + 0.5 * data.spacing * (glen(k, a)? + glen(k + 1, b)?));
    }
    Ok(out)
}

/// Worst window mass over centres at the data nodes, by prefix sums over
/// the segments inside `[x₀ - δ, x₀ + δ]`.
fn worst_window(masses: &[f64], spacing: f64, delta: f64) -> (f64, usize) {
    let mut prefix = vec![0.0; masses.len() + 1];
    for (k, m) in masses.iter().enumerate() {
        prefix[k + 1] = prefix[k] + m;
    }
    let r = (delta / spacing + 1e-9).floor() as usize;
    let nodes = masses.len() + 1;
    let mut best = (0.0, 0);
    for c in 0..nodes {
        let lo = c.saturating_sub(r);
        let hi = (c + r).min(nodes - 1);
        let m = prefix[hi] - prefix[lo];
        if m > best.0 {
            best = (m, c);
        }
    }
    best
}

/// Window masses of the data for each `δ`, the localization radius for `ε`
/// and the localized L^{1,1} size at the worst window.
pub fn concentration_profile(
    data: &CauchyData,
    target: &TargetManifold,
    deltas: &[f64],
    epsilon: f64,
) -> Result<ConcentrationReport> {
    if deltas.iter().any(|d| !(*d > 0.0)) || !(epsilon > 0.0) {
        return invalid("window radii and ε must be positive");
    }
    let masses = segment_masses(data, target)?;
    let flat = TargetManifold::flat(data.dim)?;
    let mut rows = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let (worst_mass, c) = worst_window(&masses, data.spacing, delta);
        let x0 = data.x(c);
        let f0 = data.f(c).to_vec();
        let chi = |x: f64| crate::norms::standard_bump((x - x0) / delta);
        let local = CauchyData::from_fn(
            data.x_min,
            data.x_max,
            data.spacing,
            data.dim,
            |x, o| {
                let k = ((x - data.x_min) / data.spacing).round() as usize;
                for m in 0..data.dim {
                    o[m] = chi(x) * (data.f(k)[m] - f0[m]);
                }
            },
            |x, o| {
                let k = ((x - data.x_min) / data.spacing).round() as usize;
                for m in 0..data.dim {
                    o[m] = chi(x) * data.g(k)[m];
                }
            },
        )?;
        rows.push(WindowRow { delta, worst_mass, center: x0, localized_l11: l11_norm(&local, &flat)? });
    }
    let localization_radius =
        rows.iter().filter(|r| r.worst_mass < epsilon).map(|r| r.delta).fold(None, |m: Option<f64>, d| {
            Some(m.map_or(d, |m| m.max(d)))
        });
    Ok(ConcentrationReport { epsilon, rows, localization_radius })
}

/// `sup over x₀` of `∫_{|x - x₀| ≤ δ} (|φ_u| + |φ_v|) dx` on the cell row
/// nearest to time `t`.
pub fn solution_window_mass(phi: &GridField, t: f64, delta: f64) -> Result<f64> {
    let g = &phi.grid;
    let e = (2.0 * t / g.h).round() as i64;
    let dim = phi.dim;
    let target = &phi.target;
    let rows = map_cell_rows(phi, |row| {
        if row.e != e {
            return None;
        }
        let mut dens = Vec::with_capacity(row.ij.len());
        for p in 0..row.ij.len() {
            let r = p * dim..(p + 1) * dim;
            let base = &row.avg[r.clone()];
            let a = target.metric_length(base, &row.du[r.clone()]).unwrap_or(f64::NAN);
            let b = target.metric_length(base, &row.dv[r]).unwrap_or(f64::NAN);
            dens.push(g.h * (a + b));
        }
        Some(dens)
    });
    let dens = rows.into_iter().flatten().next().ok_or_else(|| {
        Error::InvalidParameter(format!("time {t} outside the lattice interior"))
    })?;
    if dens.iter().any(|d| d.is_nan()) {
        return invalid("metric lengths failed on the row");
    }
    // cell centres on a row are spaced by h in x; a window of radius δ holds
    // about 2δ/h of them
    let r = (delta / g.h + 1e-9).floor() as usize;
    let mut prefix = vec![0.0; dens.len() + 1];
    for (k, d) in dens.iter().enumerate() {
        prefix[k + 1] = prefix[k] + d;
    }
    Ok((0..dens.len())
        .map(|c| prefix[(c + r + 1).min(dens.len())] - prefix[c.saturating_sub(r)])
        .fold(0.0, f64::max))
}

/// `∬ |φ_u|_h |φ_v|_h du dv` over the lattice cells.
pub fn interaction_integral(phi: &GridField) -> Result<f64> {
    let g = &phi.grid;
    let dim = phi.dim;
    let target = &phi.target;
    let parts = map_cell_rows(phi, |row| -> Result<f64> {
        let mut acc = 0.0;
        for p in 0..row.ij.len() {
            let r = p * dim..(p + 1) * dim;
            let base = &row.avg[r.clone()];
            acc += target.metric_length(base, &row.du[r.clone()])? * target.metric_length(base, &row.dv[r])?;
        }
        Ok(acc * g.h * g.h)
    });
    parts.into_iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_interpolation_reproduces_quadratics() {
        let grid = NullGrid::square(0.1, -1.0, 21).unwrap();
        let f = GridField::from_fn(grid, TargetManifold::flat(1).unwrap(), FieldMeta::default(), |u, v, o| {
            o[0] = u * u - 2.0 * u * v + v * v + 0.5 * u
        });
        for &(u, v) in &[(0.033, -0.71), (-0.97, 0.95), (0.999, 0.5)] {
            let p = cubic_interpolate(&f, u, v).unwrap()[0];
            assert!((p - (u * u - 2.0 * u * v + v * v + 0.5 * u)).abs() < 1e-12, "{u} {v}");
        }
        assert!(cubic_interpolate(&f, 1.2, 0.0).is_none());
    }

    #[test]
    fn quarter_point_maps_to_unit() {
        let c = compactify_fn(41, 1.2, &TargetManifold::flat(1).unwrap(), |u, v, o| o[0] = u + 2.0 * v).unwrap();
        let q = std::f64::consts::FRAC_PI_4;
        assert!((c.value_at(q, q).unwrap()[0] - 3.0).abs() < 1e-2);
    }

    #[test]
    fn free_state_of_free_field_is_itself() {
        let grid = NullGrid::square(0.1, -2.0, 41).unwrap();
        let phi = GridField::from_fn(grid.clone(), TargetManifold::flat(1).unwrap(), FieldMeta::default(), |u, v, o| {
            o[0] = u.sin() + v * v
        });
        let s = scattering_states(&phi, 0.5).unwrap();
        for st in [&s.plus, &s.minus] {
            let f = st.to_field(&grid).unwrap();
            let e = f.difference(&phi).unwrap().sup_norm();
            assert!(e < 1e-14, "{e}");
        }
    }
}
