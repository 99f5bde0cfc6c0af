use serde::Serialize;

use super::data::CauchyData;
use super::grid::{CellField, FieldMeta, GridField, NullGrid};
use super::scheme::{check_grid_for, nonlinearity, strip_lattice};
use crate::error::{Error, Result};
use crate::geometry::TargetManifold;
use crate::norms::x_norm;

/// Free solution `F(u) + G(v)` on the strip `|t| <= t_max`.
///
/// `F(u) = (f(u) + ∫ g) / 2`, `G(v) = (f(v) - ∫ g) / 2` with the primitive of
/// `g` by the trapezoid rule on the data nodes.
pub fn dalembert_free(data: &CauchyData, t_max: f64, h: f64) -> Result<GridField> {
    let (padded, grid) = strip_lattice(data, h, t_max, t_max)?;
    let flat = TargetManifold::flat(data.dim)?;
    dalembert_free_on(&padded, &grid, &flat)
}

/// Free solution on a lattice matched to `data`, labelled with `target`.
pub fn dalembert_free_on(data: &CauchyData, grid: &NullGrid, target: &TargetManifold) -> Result<GridField> {
    check_grid_for(data, grid)?;
    let dim = data.dim;
    let (fu, gv) = free_profiles(data);
    let mut field = GridField::zeros(grid.clone(), target.clone(), FieldMeta {
        scheme_order: 2,
        projection: false,
        label: "free".into(),
    });
    let nodes: Vec<(usize, usize)> = field.nodes().collect();
    let vals = field.values_mut();
    for (k, (i, j)) in nodes.into_iter().enumerate() {
        for m in 0..dim {
            vals[k * dim + m] = fu[i * dim + m] + gv[j * dim + m];
        }
    }
    Ok(field)
}

/// Characteristic profiles `F`, `G` at the lattice nodes (every other data sample).
pub fn free_profiles(data: &CauchyData) -> (Vec<f64>, Vec<f64>) {
    let dim = data.dim;
    let len = data.len();
    let mut prim = vec![0.0; len * dim];
    for k in 1..len {
        let (a, b) = (data.g(k - 1), data.g(k));
        for m in 0..dim {
            prim[k * dim + m] = prim[(k - 1) * dim + m] + 0.5 * data.spacing * (a[m] + b[m]);
        }
    }
    let n = (len - 1) / 2 + 1;
    let mut fu = vec![0.0; n * dim];
    let mut gv = vec![0.0; n * dim];
    for i in 0..n {
        let f = data.f(2 * i);
        for m in 0..dim {
            let q = prim[2 * i * dim + m];
            fu[i * dim + m] = 0.5 * (f[m] + q);
            gv[i * dim + m] = 0.5 * (f[m] - q);
        }
    }
    (fu, gv)
}

/// Solution of `φ_uv = F` with vanishing data on `t = 0`.
///
/// The output's discrete mixed difference reproduces every forcing cell
/// exactly up to round-off; rows `t = ±h/2` split the first cell evenly.
pub fn inverse_box(forcing: &CellField, grid: &NullGrid) -> Result<GridField> {
    if &forcing.grid != grid {
        return Err(Error::GridMismatch("forcing lives on another lattice".into()));
    }
    if grid.d_min > -1 || grid.d_max < 1 {
        return Err(Error::GridMismatch("inverse_box needs rows on both sides of t = 0".into()));
    }
    let dim = forcing.dim;
    let h2 = grid.h * grid.h;
    let flat = TargetManifold::flat(dim)?;
    let mut out = GridField::zeros(grid.clone(), flat, FieldMeta {
        scheme_order: 2,
        projection: false,
        label: "inverse_box".into(),
    });
    let mut buf = vec![0.0; dim];
    for i in 0..grid.n - 1 {
        let f = forcing.get(i, i).expect("diagonal cell");
        for m in 0..dim {
            buf[m] = -0.5 * h2 * f[m];
        }
        out.set(i + 1, i, &buf);
        out.set(i, i + 1, &buf);
    }
    for e in 2..=grid.d_max as usize {
        for j in 0..grid.n - e {
            let i = j + e;
            let f = forcing.get(i - 1, j).expect("cell");
            let (a, b, c) = (out.at(i, j + 1), out.at(i - 1, j), out.at(i - 1, j + 1));
            for m in 0..dim {
                buf[m] = a[m] + b[m] - c[m] - h2 * f[m];
            }
            out.set(i, j, &buf);
        }
    }
    for e in 2..=(-grid.d_min) as usize {
        for i in 0..grid.n - e {
            let j = i + e;
            let f = forcing.get(i, j - 1).expect("cell");
            let (a, b, c) = (out.at(i + 1, j), out.at(i, j - 1), out.at(i + 1, j - 1));
            for m in 0..dim {
                buf[m] = a[m] + b[m] - c[m] - h2 * f[m];
            }
            out.set(i, j, &buf);
        }
    }
    Ok(out)
}

/// Iterates and increment diagnostics of [`picard_iterate`].
#[derive(Debug, Clone, Serialize)]
pub struct PicardReport {
    #[serde(skip)]
    pub iterates: Vec<GridField>,
    /// `‖φ^{k+1} - φ^k‖_X` for `k = 0, 1, ...`.
    pub x_increments: Vec<f64>,
    pub sup_increments: Vec<f64>,
    /// `r_k = inc_k / inc_{k-1}` for `k >= 1`; `None` when the denominator is 0.
    pub x_ratios: Vec<Option<f64>>,
    pub sup_ratios: Vec<Option<f64>>,
    /// First step whose X increment is exactly zero.
    pub converged_at: Option<usize>,
}

/// Picard map `φ ↦ S(f, g) + □⁻¹(-Γ(φ)(φ_u, φ_v))` started from the free
/// solution, `iterations` times.
pub fn picard_iterate(
    data: &CauchyData,
    target: &TargetManifold,
    t_max: f64,
    h: f64,
    iterations: usize,
) -> Result<PicardReport> {
    if iterations < 2 {
        return Err(Error::InvalidParameter("picard_iterate needs at least 2 iterations".into()));
    }
    data.validate_for(target)?;
    let (padded, grid) = strip_lattice(data, h, t_max, t_max)?;
    let free = dalembert_free_on(&padded, &grid, target)?;
    let mut report = PicardReport {
        iterates: vec![free.clone()],
        x_increments: Vec::new(),
        sup_increments: Vec::new(),
        x_ratios: Vec::new(),
        sup_ratios: Vec::new(),
        converged_at: None,
    };
    let mut big_streak = 0;
    for k in 0..iterations {
        let prev = report.iterates.last().expect("iterate");
        let mut forcing = nonlinearity(prev)?;
        forcing.values_mut().iter_mut().for_each(|a| *a = -*a);
        let duhamel = inverse_box(&forcing, &grid)?;
        let mut next = free.clone();
        for (a, b) in next.values_mut().iter_mut().zip(duhamel.values()) {
            *a += b;
        }
        next.meta.label = format!("picard_{}", k + 1);
        let diff = next.difference(prev)?;
        let xi = x_norm(&diff)?;
        let si = diff.sup_norm();
        if report.converged_at.is_none() && xi == 0.0 {
            report.converged_at = Some(k);
        }
        if k >= 1 {
            let rx = ratio(xi, report.x_increments[k - 1]);
            let rs = ratio(si, report.sup_increments[k - 1]);
            report.x_ratios.push(rx);
            report.sup_ratios.push(rs);
            if rx.map_or(false, |r| r > 10.0) {
                big_streak += 1;
                if big_streak >= 2 {
                    return Err(Error::Divergence { step: k, ratio: rx.unwrap_or(f64::INFINITY) });
                }
            } else {
                big_streak = 0;
            }
        }
        report.x_increments.push(xi);
        report.sup_increments.push(si);
        report.iterates.push(next);
    }
    Ok(report)
}

fn ratio(a: f64, b: f64) -> Option<f64> {
    if b > 0.0 {
        Some(a / b)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_forcing_gives_quadratic() {
        let grid = NullGrid::new(0.1, -1.0, 21, -6, 7).unwrap();
        let mut f = CellField::zeros(grid.clone(), 1);
        f.values_mut().iter_mut().for_each(|a| *a = 1.0);
        let phi = inverse_box(&f, &grid).unwrap();
        for (i, j) in phi.nodes() {
            let (u, v) = (grid.u(i), grid.v(j));
            assert!((phi.at(i, j)[0] + 0.5 * (u - v).powi(2)).abs() < 1e-12);
        }
    }
}
