//! Characteristic marching for `φ_uv = -Γ(φ)(φ_u, φ_v)`.
//!
//! Time seeding: with `u = x + t`, `v = x - t` we have `∂_x² - ∂_t² = 4 ∂_u ∂_v`
//! and `4 Γ(φ_u, φ_v) = Γ(φ_x, φ_x) - Γ(φ_t, φ_t)`, so
//!
//! ```text
//! φ_tt = f'' + Γ(f)(f', f') - Γ(f)(g, g)      at t = 0.
//! ```
//!
//! The signature factor in front of the velocity term is therefore `-1`; on
//! the sphere this reads `φ_tt = f'' + f (|f'|² - |g|²)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::CauchyData;
use super::grid::{CellField, FieldMeta, GridField, NullGrid};
use crate::error::{invalid, Error, Result};
use crate::geometry::TargetManifold;

/// Default blowup ceiling for `|φ_u|`, `|φ_v|` in chart units.
pub const DEFAULT_BLOWUP_CEILING: f64 = 1e6;

/// Rows shorter than this are marched sequentially.
const PAR_ROW_MIN: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveOptions {
    /// Retract onto the target after every cell (embedded targets only).
    pub retract: bool,
    pub blowup_ceiling: f64,
    /// Backward extent of the strip; `None` means the same as forward.
    pub t_back: Option<f64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { retract: true, blowup_ceiling: DEFAULT_BLOWUP_CEILING, t_back: None }
    }
}

/// Scratch buffers for one cell update.
pub(crate) struct CellScratch {
    du: Vec<f64>,
    dv: Vec<f64>,
    avg: Vec<f64>,
    gam: Vec<f64>,
}

impl CellScratch {
    pub(crate) fn new(dim: usize) -> Self {
        Self { du: vec![0.0; dim], dv: vec![0.0; dim], avg: vec![0.0; dim], gam: vec![0.0; dim] }
    }
}

/// Fills `p11` from the other three corners of a lattice cell.
///
/// Returns the larger of `|D_u φ|`, `|D_v φ|` on the cell.
pub(crate) fn advance_cell_into(
    p00: &[f64],
    p10: &[f64],
    p01: &[f64],
    target: &TargetManifold,
    h: f64,
    retract: bool,
    s: &mut CellScratch,
    p11: &mut [f64],
) -> Result<f64> {
    let dim = p00.len();
    let inv2h = 0.5 / h;
    let h2 = h * h;
    // free guess, then predictor with the three-point average, then corrector
    for k in 0..dim {
        p11[k] = p10[k] + (p01[k] - p00[k]);
        s.avg[k] = (p00[k] + p10[k] + p01[k]) / 3.0;
    }
    for pass in 0..2 {
        for k in 0..dim {
            s.du[k] = ((p10[k] - p00[k]) + (p11[k] - p01[k])) * inv2h;
            s.dv[k] = ((p01[k] - p00[k]) + (p11[k] - p10[k])) * inv2h;
            if pass == 1 {
                s.avg[k] = 0.25 * (p00[k] + p10[k] + p01[k] + p11[k]);
            }
        }
        target.contract_into(&s.avg, &s.du, &s.dv, &mut s.gam)?;
        for k in 0..dim {
            p11[k] = p10[k] + (p01[k] - p00[k]) - h2 * s.gam[k];
        }
    }
    if retract {
        target.retract_in_place(p11);
    }
    let nu = s.du.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = s.dv.iter().map(|a| a * a).sum::<f64>().sqrt();
    Ok(if nu.is_finite() && nv.is_finite() && p11.iter().all(|a| a.is_finite()) {
        nu.max(nv)
    } else {
        f64::INFINITY
    })
}

/// Second-order characteristic update of a single cell.
///
/// Given `φ(u, v)`, `φ(u+h, v)`, `φ(u, v+h)` returns `φ(u+h, v+h)`.
pub fn advance_cell(
    p00: &[f64],
    p10: &[f64],
    p01: &[f64],
    target: &TargetManifold,
    h: f64,
    retract: bool,
) -> Result<Vec<f64>> {
    let dim = target.chart_dim();
    if p00.len() != dim || p10.len() != dim || p01.len() != dim {
        return invalid("corner dimension differs from target dimension");
    }
    let mut out = vec![0.0; dim];
    let mut s = CellScratch::new(dim);
    advance_cell_into(p00, p10, p01, target, h, retract, &mut s, &mut out)?;
    Ok(out)
}

/// Taylor value `f + τ g + τ²/2 φ_tt` at fine data index `k`.
fn taylor_seed(data: &CauchyData, target: &TargetManifold, k: usize, tau: f64, out: &mut [f64]) -> Result<()> {
    let dim = data.dim;
    let mut fp = vec![0.0; dim];
    let mut fpp = vec![0.0; dim];
    let mut a = vec![0.0; dim];
    let mut b = vec![0.0; dim];
    // three-point stencils keep the seed inside [x - h/2, x + h/2]
    let (l, f, r) = (data.f_ext(k as i64 - 1), data.f(k), data.f_ext(k as i64 + 1));
    let s = data.spacing;
    for m in 0..dim {
        fp[m] = (r[m] - l[m]) / (2.0 * s);
        fpp[m] = (r[m] - 2.0 * f[m] + l[m]) / (s * s);
    }
    let g = data.g(k);
    target.contract_into(f, &fp, &fp, &mut a)?;
    target.contract_into(f, g, g, &mut b)?;
    for m in 0..dim {
        let ftt = fpp[m] + a[m] - b[m];
        out[m] = f[m] + tau * g[m] + 0.5 * tau * tau * ftt;
    }
    Ok(())
}

/// Marches one row from the two preceding rows.
///
/// `prev1` has one node more than the new row, `prev2` two more; the node at
/// position `p` uses `prev2[p+1]`, `prev1[p+1]`, `prev1[p]`.
fn march_row(
    prev2: &[f64],
    prev1: &[f64],
    len: usize,
    dim: usize,
    target: &TargetManifold,
    h: f64,
    retract: bool,
) -> (Vec<f64>, Vec<f64>, Result<()>) {
    let mut row = vec![0.0; len * dim];
    let mut sizes = vec![0.0; len];
    let work = |(p, (out, size)): (usize, (&mut [f64], &mut f64))| -> Result<()> {
        let mut s = CellScratch::new(dim);
        let o = &prev2[(p + 1) * dim..(p + 2) * dim];
        let a = &prev1[(p + 1) * dim..(p + 2) * dim];
        let b = &prev1[p * dim..(p + 1) * dim];
        *size = advance_cell_into(o, a, b, target, h, retract, &mut s, out)?;
        Ok(())
    };
    let res = if len >= PAR_ROW_MIN {
        row.par_chunks_mut(dim)
            .zip(sizes.par_iter_mut())
            .enumerate()
            .try_for_each(work)
    } else {
        row.chunks_mut(dim).zip(sizes.iter_mut()).enumerate().try_for_each(work)
    };
    (row, sizes, res)
}

/// Lattice for the strip `-t_back <= t <= t_max` over the data interval.
///
/// Data must be sampled at spacing `h / 2`; the even samples become the
/// `t = 0` lattice nodes and the odd samples seed the rows `t = ±h/2`. The
/// returned data is padded by its constant extension so the strip over the
/// original interval is complete.
pub fn strip_lattice(data: &CauchyData, h: f64, t_max: f64, t_back: f64) -> Result<(CauchyData, NullGrid)> {
    check_spacing(data, h)?;
    if !(t_max >= 0.0) || !(t_back >= 0.0) {
        return invalid("strip extents must be nonnegative");
    }
    let d_fwd = (2.0 * t_max / h - 1e-9).ceil().max(1.0) as i64;
    let d_bwd = (2.0 * t_back / h - 1e-9).ceil().max(1.0) as i64;
    let pad_lattice = ((d_fwd.max(d_bwd) + 1) / 2 + 1) as usize;
    let padded = data.padded(2 * pad_lattice);
    let n = (padded.len() - 1) / 2 + 1;
    let grid = NullGrid::new(h, padded.x_min, n, -d_bwd, d_fwd)?;
    Ok((padded, grid))
}

/// Lattice filling the full square over the data interval (no padding).
pub fn square_lattice(data: &CauchyData, h: f64) -> Result<NullGrid> {
    check_spacing(data, h)?;
    NullGrid::square(h, data.x_min, (data.len() - 1) / 2 + 1)
}

fn check_spacing(data: &CauchyData, h: f64) -> Result<()> {
    if !(h > 0.0) || (2.0 * data.spacing - h).abs() > 1e-9 * h {
        return invalid(format!(
            "lattice spacing h = {h} must equal twice the data spacing {}",
            data.spacing
        ));
    }
    if data.len() % 2 == 0 || data.len() < 5 {
        return invalid("data needs an odd number (at least 5) of samples");
    }
    Ok(())
}

/// Checks that `grid` is the lattice carried by `data`.
pub(crate) fn check_grid_for(data: &CauchyData, grid: &NullGrid) -> Result<()> {
    check_spacing(data, grid.h)?;
    if grid.n != (data.len() - 1) / 2 + 1 || (grid.origin - data.x_min).abs() > 1e-12 * (1.0 + grid.origin.abs()) {
        return Err(Error::GridMismatch("lattice does not match the data nodes".into()));
    }
    if grid.d_min > -1 || grid.d_max < 1 {
        return Err(Error::GridMismatch("lattice needs the rows t = ±h/2".into()));
    }
    Ok(())
}

/// Evolves Cauchy data on the strip `-t_back <= t <= t_max` (`t_back`
/// defaults to `t_max`).
pub fn solve(
    data: &CauchyData,
    target: &TargetManifold,
    t_max: f64,
    h: f64,
    opts: &SolveOptions,
) -> Result<GridField> {
    data.validate_for(target)?;
    let (padded, grid) = strip_lattice(data, h, t_max, opts.t_back.unwrap_or(t_max))?;
    solve_on(&padded, &grid, target, opts)
}

/// Evolves on the full square over the data interval.
pub fn solve_square(
    data: &CauchyData,
    target: &TargetManifold,
    h: f64,
    opts: &SolveOptions,
) -> Result<GridField> {
    data.validate_for(target)?;
    let grid = square_lattice(data, h)?;
    solve_on(data, &grid, target, opts)
}

/// Evolves data already matched to `grid` (see [`strip_lattice`]).
pub fn solve_on(
    data: &CauchyData,
    grid: &NullGrid,
    target: &TargetManifold,
    opts: &SolveOptions,
) -> Result<GridField> {
    check_grid_for(data, grid)?;
    let dim = data.dim;
    if target.chart_dim() != dim {
        return invalid("data dimension differs from target dimension");
    }
    let n = grid.n;
    let (d_min, d_max) = (grid.d_min, grid.d_max);
    let h = grid.h;
    let retract = opts.retract && target.has_embedding();

    let mut row0 = vec![0.0; n * dim];
    for k in 0..n {
        row0[k * dim..(k + 1) * dim].copy_from_slice(data.f(2 * k));
    }
    let seed_row = |tau: f64| -> Result<Vec<f64>> {
        let mut r = vec![0.0; (n - 1) * dim];
        for p in 0..n - 1 {
            let out = &mut r[p * dim..(p + 1) * dim];
            taylor_seed(data, target, 2 * p + 1, tau, out)?;
            if retract {
                target.retract_in_place(out);
            }
        }
        Ok(r)
    };

    let mut forward: Vec<Vec<f64>> = vec![row0.clone(), seed_row(0.5 * h)?];
    let mut backward: Vec<Vec<f64>> = vec![row0, seed_row(-0.5 * h)?];
    for (rows, dir, extent) in [(&mut forward, 1i64, d_max), (&mut backward, -1i64, -d_min)] {
        for e in 2..=extent {
            let len = n - e as usize;
            let (row, sizes, res) = march_row(
                &rows[e as usize - 2],
                &rows[e as usize - 1],
                len,
                dim,
                target,
                h,
                retract,
            );
            res?;
            if let Some(p) = sizes.iter().position(|&s| !(s <= opts.blowup_ceiling)) {
                let (i, j) = if dir > 0 { (p + e as usize, p) } else { (p, p + e as usize) };
                return Err(Error::Blowup { u: grid.u(i), v: grid.v(j), value: sizes[p] });
            }
            rows.push(row);
        }
    }

    let mut values = Vec::with_capacity(grid.node_count() * dim);
    for d in d_min..=d_max {
        let r = if d >= 0 { &forward[d as usize] } else { &backward[(-d) as usize] };
        values.extend_from_slice(r);
    }
    let meta = FieldMeta { scheme_order: 2, projection: retract, label: "solve".into() };
    GridField::from_values(grid.clone(), target.clone(), meta, values)
}

/// Cell values of `Γ(φ̄)(D_u φ, D_v φ)` with the 4-point average and the
/// cell-centred divided differences used by the scheme.
pub fn nonlinearity(field: &GridField) -> Result<CellField> {
    let h = field.grid.h;
    let dim = field.dim;
    let mut out = CellField::zeros(field.grid.clone(), dim);
    let cells = out.cells();
    let mut vals = vec![0.0; cells.len() * dim];
    vals.par_chunks_mut(dim).zip(cells.par_iter()).try_for_each(|(o, &(i, j))| -> Result<()> {
        let mut s = CellScratch::new(dim);
        let [p00, p10, p01, p11] = field.cell(i, j).expect("cell corners");
        for k in 0..dim {
            s.du[k] = ((p10[k] - p00[k]) + (p11[k] - p01[k])) / (2.0 * h);
            s.dv[k] = ((p01[k] - p00[k]) + (p11[k] - p10[k])) / (2.0 * h);
            s.avg[k] = 0.25 * (p00[k] + p10[k] + p01[k] + p11[k]);
        }
        field.target.contract_into(&s.avg, &s.du, &s.dv, o)
    })?;
    out.values_mut().copy_from_slice(&vals);
    Ok(out)
}

/// Cell values of the discrete residual `mixed difference + Γ(φ̄)(D_u φ, D_v φ)`.
pub fn residual_cells(field: &GridField) -> Result<CellField> {
    let mut r = CellField::mixed_difference(field);
    let nl = nonlinearity(field)?;
    for (a, b) in r.values_mut().iter_mut().zip(nl.values()) {
        *a += b;
    }
    Ok(r)
}

/// Sup over interior cells of the discrete wave-map residual.
pub fn wave_map_residual(field: &GridField) -> Result<f64> {
    let r = residual_cells(field)?;
    Ok(r.values()
        .chunks(field.dim)
        .map(|c| c.iter().map(|a| a * a).sum::<f64>().sqrt())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_are_fixed_points() {
        let flat = TargetManifold::flat(2).unwrap();
        let c = [0.3, -1.2];
        assert_eq!(advance_cell(&c, &c, &c, &flat, 0.1, false).unwrap(), c.to_vec());
        let s2 = TargetManifold::sphere_extrinsic(2).unwrap();
        let c = [0.6, 0.8];
        assert_eq!(advance_cell(&c, &c, &c, &s2, 0.1, true).unwrap(), c.to_vec());
    }

    #[test]
    fn linear_transport_is_exact() {
        let flat = TargetManifold::flat(1).unwrap();
        let (u, h) = (0.7, 0.05);
        let out = advance_cell(&[u], &[u + h], &[u], &flat, h, false).unwrap();
        assert_eq!(out, vec![u + h]);
    }

    #[test]
    fn short_data_rejected() {
        let d = CauchyData::from_fn(0.0, 1.0, 0.5, 1, |_, o| o[0] = 0.0, |_, o| o[0] = 0.0).unwrap();
        let flat = TargetManifold::flat(1).unwrap();
        assert!(solve(&d, &flat, 1.0, 0.3, &SolveOptions::default()).is_err());
    }
}
