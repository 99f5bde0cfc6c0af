//! Energy-momentum tensor, Pohlmeyer transport and the rotation identity.
//!
//! All derivatives are the cell-centred differences of the solver: on the
//! cell with lower corner `(i, j)`,
//! `D_u φ = ((φ10 - φ00) + (φ11 - φ01)) / 2h`, likewise `D_v φ`, and the base
//! point is the four-corner average. Cell centres of cell row `e = i - j`
//! lie on the slice `t = e h / 2` at spacing `h` in `x`.
//!
//! With `g = du dv` the off-diagonal component
//! `T_uv = <φ_u, φ_v> - ½ g_uv <∂φ, ∂φ>` vanishes identically in one space
//! dimension; the reported value is the round-off of evaluating both terms.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::norms::{mixed_norm_samples, MixedNorm};
use crate::nullsolver::GridField;

/// Cell-centred samples along one cell row.
pub struct CellRow {
    pub e: i64,
    pub ij: Vec<(usize, usize)>,
    pub avg: Vec<f64>,
    pub du: Vec<f64>,
    pub dv: Vec<f64>,
    pub mixed: Vec<f64>,
}

fn cell_row(field: &GridField, e: i64) -> CellRow {
    let g = &field.grid;
    let dim = field.dim;
    let count = g.n - 1 - e.unsigned_abs() as usize;
    let js = if e < 0 { (-e) as usize } else { 0 };
    let mut row = CellRow {
        e,
        ij: Vec::with_capacity(count),
        avg: vec![0.0; count * dim],
        du: vec![0.0; count * dim],
        dv: vec![0.0; count * dim],
        mixed: vec![0.0; count * dim],
    };
    let s = 0.5 / g.h;
    let h2 = g.h * g.h;
    for p in 0..count {
        let j = js + p;
        let i = (j as i64 + e) as usize;
        row.ij.push((i, j));
        let [p00, p10, p01, p11] = field.cell(i, j).expect("cell corners");
        for k in 0..dim {
            let q = p * dim + k;
            row.avg[q] = 0.25 * (p00[k] + p10[k] + p01[k] + p11[k]);
            row.du[q] = ((p10[k] - p00[k]) + (p11[k] - p01[k])) * s;
            row.dv[q] = ((p01[k] - p00[k]) + (p11[k] - p10[k])) * s;
            row.mixed[q] = ((p11[k] - p10[k]) - (p01[k] - p00[k])) / h2;
        }
    }
    row
}

/// Applies `f` to every cell row (in parallel) and returns the results in
/// row order.
pub fn map_cell_rows<T, F>(field: &GridField, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&CellRow) -> T + Sync + Send,
{
    let g = &field.grid;
    if g.n < 2 || g.d_max - g.d_min < 2 {
        return Vec::new();
    }
    ((g.d_min + 1)..=(g.d_max - 1))
        .into_par_iter()
        .map(|e| f(&cell_row(field, e)))
        .collect()
}

/// Energy-momentum components on one cell row.
#[derive(Debug, Clone, Serialize)]
pub struct TensorRow {
    pub t: f64,
    pub x: Vec<f64>,
    pub t_uu: Vec<f64>,
    pub t_vv: Vec<f64>,
    pub t_uv: Vec<f64>,
    /// `∫ (T_uu + T_vv) dx` by the trapezoid rule on the cell centres.
    pub energy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyMomentum {
    pub h: f64,
    pub rows: Vec<TensorRow>,
}

impl EnergyMomentum {
    /// `(t, E(t))` on the cell-row times.
    pub fn energy_series(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.t, r.energy)).collect()
    }

    /// `E(t)` by linear interpolation between cell rows.
    pub fn energy_at(&self, t: f64) -> Option<f64> {
        let first = self.rows.first()?;
        let k = (t - first.t) / (0.5 * self.h);
        if k < -1e-9 || k > (self.rows.len() - 1) as f64 + 1e-9 {
            return None;
        }
        let lo = (k.floor().max(0.0) as usize).min(self.rows.len() - 1);
        let hi = (lo + 1).min(self.rows.len() - 1);
        let w = (k - lo as f64).clamp(0.0, 1.0);
        Some((1.0 - w) * self.rows[lo].energy + w * self.rows[hi].energy)
    }

    pub fn max_abs_t_uv(&self) -> f64 {
        self.rows.iter().flat_map(|r| r.t_uv.iter()).fold(0.0, |m, a| m.max(a.abs()))
    }
}

/// `T_uu = ½|φ_u|²`, `T_vv = ½|φ_v|²`, `T_uv` from its defining formula,
/// and the energy on every cell row.
pub fn energy_momentum(field: &GridField) -> Result<EnergyMomentum> {
    let g = &field.grid;
    if g.n < 3 || g.d_max - g.d_min < 2 {
        return invalid("energy_momentum needs at least 3 nodes per direction");
    }
    let dim = field.dim;
    let target = &field.target;
    let rows: Result<Vec<TensorRow>> = map_cell_rows(field, |row| {
        let count = row.ij.len();
        let mut out = TensorRow {
            t: g.row_time(row.e),
            x: Vec::with_capacity(count),
            t_uu: Vec::with_capacity(count),
            t_vv: Vec::with_capacity(count),
            t_uv: Vec::with_capacity(count),
            energy: 0.0,
        };
        let mut dx = vec![0.0; dim];
        let mut dt = vec![0.0; dim];
        for (p, &(i, j)) in row.ij.iter().enumerate() {
            let sl = p * dim..(p + 1) * dim;
            let (base, du, dv) = (&row.avg[sl.clone()], &row.du[sl.clone()], &row.dv[sl]);
            for k in 0..dim {
                dx[k] = du[k] + dv[k];
                dt[k] = du[k] - dv[k];
            }
            let uu = 0.5 * target.metric_inner(base, du, du)?;
            let vv = 0.5 * target.metric_inner(base, dv, dv)?;
            // <∂φ, ∂φ> = |φ_x|² - |φ_t|², g_uv = 1/2
            let trace = target.metric_inner(base, &dx, &dx)? - target.metric_inner(base, &dt, &dt)?;
            let uv = target.metric_inner(base, du, dv)? - 0.25 * trace;
            out.x.push(g.origin + 0.5 * g.h * (i + j + 1) as f64);
            out.t_uu.push(uu);
            out.t_vv.push(vv);
            out.t_uv.push(uv);
        }
        for p in 0..count {
            let w = if p == 0 || p + 1 == count { 0.5 } else { 1.0 };
            out.energy += w * (out.t_uu[p] + out.t_vv[p]);
        }
        out.energy *= g.h;
        Ok(out)
    })
    .into_iter()
    .collect();
    Ok(EnergyMomentum { h: g.h, rows: rows? })
}

/// Per-line variation of the Pohlmeyer densities.
#[derive(Debug, Clone, Serialize)]
pub struct PohlmeyerProfile {
    /// `(u, max_v |φ_u| - min_v |φ_u|)` per u-column of cells.
    pub columns_u: Vec<(f64, f64)>,
    /// `(v, max_u |φ_v| - min_u |φ_v|)` per v-column of cells.
    pub columns_v: Vec<(f64, f64)>,
}

impl PohlmeyerProfile {
    pub fn residual_u(&self) -> f64 {
        self.columns_u.iter().fold(0.0, |m, c| m.max(c.1))
    }

    pub fn residual_v(&self) -> f64 {
        self.columns_v.iter().fold(0.0, |m, c| m.max(c.1))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "direction,coordinate,variation")?;
        for (c, var) in &self.columns_u {
            writeln!(w, "u,{c:.17e},{var:.17e}")?;
        }
        for (c, var) in &self.columns_v {
            writeln!(w, "v,{c:.17e},{var:.17e}")?;
        }
        Ok(())
    }
}

/// Variation of `|φ_u|_h` along each u-column and of `|φ_v|_h` along each
/// v-column.
pub fn pohlmeyer_check(field: &GridField) -> Result<PohlmeyerProfile> {
    let g = &field.grid;
    let dim = field.dim;
    let target = &field.target;
    let per_row: Result<Vec<Vec<(usize, usize, f64, f64)>>> = map_cell_rows(field, |row| {
        row.ij
            .iter()
            .enumerate()
            .map(|(p, &(i, j))| {
                let sl = p * dim..(p + 1) * dim;
                let a = target.metric_length(&row.avg[sl.clone()], &row.du[sl.clone()])?;
                let b = target.metric_length(&row.avg[sl.clone()], &row.dv[sl])?;
                Ok((i, j, a, b))
            })
            .collect()
    })
    .into_iter()
    .collect();
    let lines = g.n.saturating_sub(1);
    let mut umin = vec![f64::INFINITY; lines];
    let mut umax = vec![f64::NEG_INFINITY; lines];
    let mut vmin = umin.clone();
    let mut vmax = umax.clone();
    for row in per_row? {
        for (i, j, a, b) in row {
            umin[i] = umin[i].min(a);
            umax[i] = umax[i].max(a);
            vmin[j] = vmin[j].min(b);
            vmax[j] = vmax[j].max(b);
        }
    }
    let centre = |l: usize| g.coord(l) + 0.5 * g.h;
    let collect = |lo: &[f64], hi: &[f64]| -> Vec<(f64, f64)> {
        (0..lines).filter(|&l| lo[l].is_finite()).map(|l| (centre(l), hi[l] - lo[l])).collect()
    };
    Ok(PohlmeyerProfile { columns_u: collect(&umin, &umax), columns_v: collect(&vmin, &vmax) })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct HardwireResidual {
    /// Sup over cells of `|φ_uv - R φ_u|`.
    pub identity: f64,
    /// Sup over cells and entries of `|R + R^t|`.
    pub antisymmetry: f64,
}

/// Checks `φ_uv = R φ_u` with `R = φ_v φ^t - φ φ_v^t` on a sphere field.
pub fn hardwire_check(field: &GridField) -> Result<HardwireResidual> {
    if !field.target.is_sphere() {
        return invalid("hardwire_check needs an extrinsic sphere field");
    }
    let dim = field.dim;
    let parts: Vec<(f64, f64)> = map_cell_rows(field, |row| {
        let mut res: f64 = 0.0;
        let mut anti: f64 = 0.0;
        let mut r = vec![0.0; dim * dim];
        for p in 0..row.ij.len() {
            let sl = p * dim..(p + 1) * dim;
            let (phi, du, dv, mix) = (&row.avg[sl.clone()], &row.du[sl.clone()], &row.dv[sl.clone()], &row.mixed[sl]);
            for k in 0..dim {
                for l in 0..dim {
                    r[k * dim + l] = dv[k] * phi[l] - phi[k] * dv[l];
                }
            }
            let mut s2 = 0.0;
            for k in 0..dim {
                let mut rk = 0.0;
                for l in 0..dim {
                    rk += r[k * dim + l] * du[l];
                    anti = anti.max((r[k * dim + l] + r[l * dim + k]).abs());
                }
                s2 += (mix[k] - rk).powi(2);
            }
            res = res.max(s2.sqrt());
        }
        (res, anti)
    });
    Ok(parts.into_iter().fold(HardwireResidual { identity: 0.0, antisymmetry: 0.0 }, |acc, (a, b)| {
        HardwireResidual { identity: acc.identity.max(a), antisymmetry: acc.antisymmetry.max(b) }
    }))
}

/// `(‖φ_u‖_{L²_u L^∞_v}, ‖φ_v‖_{L²_v L^∞_u})` over the cells of the lattice.
pub fn derivative_flux_norms(field: &GridField) -> Result<(f64, f64)> {
    let g = &field.grid;
    let dim = field.dim;
    let target = &field.target;
    let per_row: Result<Vec<Vec<(usize, usize, f64, f64)>>> = map_cell_rows(field, |row| {
        row.ij
            .iter()
            .enumerate()
            .map(|(p, &(i, j))| {
                let sl = p * dim..(p + 1) * dim;
                let a = target.metric_length(&row.avg[sl.clone()], &row.du[sl.clone()])?;
                let b = target.metric_length(&row.avg[sl.clone()], &row.dv[sl])?;
                Ok((i, j, a, b))
            })
            .collect()
    })
    .into_iter()
    .collect();
    let all: Vec<(usize, usize, f64, f64)> = per_row?.into_iter().flatten().collect();
    let lines = g.n.max(1);
    let nu = mixed_norm_samples(all.iter().map(|c| (c.0, c.2)), lines, g.h, MixedNorm::L2U);
    let nv = mixed_norm_samples(all.iter().map(|c| (c.1, c.3)), lines, g.h, MixedNorm::L2V);
    Ok((nu, nv))
}

#[derive(Debug, Clone, Serialize)]
pub struct ConservationReport {
    pub pohlmeyer_residual_u: f64,
    pub pohlmeyer_residual_v: f64,
    /// `max_t |E(t) - E(0)|` over the cell rows.
    pub energy_drift: f64,
    pub relative_energy_drift: f64,
    pub traceless_residual: f64,
    pub hardwire_residual: Option<f64>,
    pub antisymmetry_residual: Option<f64>,
    pub h: f64,
}

/// All conservation diagnostics of a field; energies over `0 <= t <= t_max`.
pub fn conservation_report(field: &GridField, t_max: Option<f64>) -> Result<ConservationReport> {
    let em = energy_momentum(field)?;
    let e0 = em.energy_at(0.0).unwrap_or(0.0);
    let t_max = t_max.unwrap_or(f64::INFINITY);
    let drift = em
        .rows
        .iter()
        .filter(|r| r.t >= -1e-12 && r.t <= t_max + 1e-12)
        .fold(0.0, |m: f64, r| m.max((r.energy - e0).abs()));
    let poh = pohlmeyer_check(field)?;
    let hw = if field.target.is_sphere() { Some(hardwire_check(field)?) } else { None };
    Ok(ConservationReport {
        pohlmeyer_residual_u: poh.residual_u(),
        pohlmeyer_residual_v: poh.residual_v(),
        energy_drift: drift,
        relative_energy_drift: if e0 > 0.0 { drift / e0 } else { 0.0 },
        traceless_residual: em.max_abs_t_uv(),
        hardwire_residual: hw.map(|h| h.identity),
        antisymmetry_residual: hw.map(|h| h.antisymmetry),
        h: field.grid.h,
    })
}

/// Euclidean `Ḣ¹ × L²` size `‖f'‖ + ‖g‖` of lattice data read off `t = 0`.
pub fn data_h1_size(field: &GridField) -> Result<f64> {
    let g = &field.grid;
    if g.d_min > -1 || g.d_max < 1 {
        return invalid("field needs rows on both sides of t = 0");
    }
    let dim = field.dim;
    let (_, row0) = field.row(0);
    let (_, up) = field.row(1);
    let (_, down) = field.row(-1);
    let mut fx = 0.0;
    let mut gl = 0.0;
    for p in 0..g.n - 1 {
        let a = &row0[p * dim..(p + 1) * dim];
        let b = &row0[(p + 1) * dim..(p + 2) * dim];
        let base: Vec<f64> = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| (y - x) / g.h).collect();
        let v: Vec<f64> = (0..dim).map(|k| (up[p * dim + k] - down[p * dim + k]) / g.h).collect();
        fx += field.target.metric_inner(&base, &d, &d)? * g.h;
        gl += field.target.metric_inner(&base, &v, &v)? * g.h;
    }
    Ok(fx.sqrt() + gl.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::TargetManifold;
    use crate::nullsolver::{FieldMeta, NullGrid};

    #[test]
    fn constant_field_has_no_energy() {
        let grid = NullGrid::new(0.1, 0.0, 20, -5, 5).unwrap();
        let s = TargetManifold::sphere_extrinsic(3).unwrap();
        let f = GridField::from_fn(grid, s, FieldMeta::default(), |_, _, o| o.copy_from_slice(&[0.0, 0.6, 0.8]));
        let r = conservation_report(&f, None).unwrap();
        assert_eq!(r.energy_drift, 0.0);
        assert_eq!(r.pohlmeyer_residual_u, 0.0);
        assert_eq!(r.hardwire_residual, Some(0.0));
        assert_eq!(r.antisymmetry_residual, Some(0.0));
    }
}
