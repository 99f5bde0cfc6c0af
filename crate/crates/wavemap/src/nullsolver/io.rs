//! GridField container and CSV time slices.
//!
//! Container layout: the 8 magic bytes `WMGRID01`, a little-endian `u64`
//! header length, the JSON header, then the node values as little-endian
//! `f64` in row-major order (rows of increasing `t`, nodes of increasing `x`,
//! components innermost).

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::grid::{FieldMeta, GridField, NullGrid};
use crate::error::{Error, Result};
use crate::geometry::TargetDescriptor;

const MAGIC: &[u8; 8] = b"WMGRID01";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldHeader {
    pub grid: NullGrid,
    pub dim: usize,
    pub target: TargetDescriptor,
    pub meta: FieldMeta,
    pub value_count: usize,
}

pub fn write_field<W: Write>(field: &GridField, mut w: W) -> Result<()> {
    let header = FieldHeader {
        grid: field.grid.clone(),
        dim: field.dim,
        target: field.target.descriptor(),
        meta: field.meta.clone(),
        value_count: field.values().len(),
    };
    let json = serde_json::to_vec(&header)?;
    w.write_all(MAGIC)?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    let mut buf = Vec::with_capacity(field.values().len() * 8);
    for v in field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_field<R: Read>(mut r: R) -> Result<GridField> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::InvalidParameter("not a grid field container".into()));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len)?;
    let mut json = vec![0u8; u64::from_le_bytes(len) as usize];
    r.read_exact(&mut json)?;
    let header: FieldHeader = serde_json::from_slice(&json)?;
    let mut raw = vec![0u8; header.value_count * 8];
    r.read_exact(&mut raw)?;
    let values = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let target = header.target.build()?;
    if target.chart_dim() != header.dim {
        return Err(Error::GridMismatch("header dimension differs from target".into()));
    }
    GridField::from_values(header.grid, target, header.meta, values)
}

/// Samples of the field on the slice of constant `t`, at the node spacing
/// `h/2` in `x`, by bilinear interpolation in `(u, v)`.
pub fn time_slice(field: &GridField, t: f64) -> Vec<(f64, Vec<f64>)> {
    let g = &field.grid;
    let h = g.h;
    let mut out = Vec::new();
    let x_lo = g.origin;
    let x_hi = g.coord(g.n - 1);
    let count = ((x_hi - x_lo) / (0.5 * h)).round() as usize;
    for k in 0..=count {
        let x = x_lo + 0.5 * h * k as f64;
        if let Some(val) = interpolate(field, x + t, x - t) {
            out.push((x, val));
        }
    }
    out
}

/// Bilinear interpolation at `(u, v)`; `None` outside the stored cells.
pub fn interpolate(field: &GridField, u: f64, v: f64) -> Option<Vec<f64>> {
    let g = &field.grid;
    let a = (u - g.origin) / g.h;
    let b = (v - g.origin) / g.h;
    let eps = 1e-9;
    if a < -eps || b < -eps {
        return None;
    }
    let mut i = a.floor().max(0.0) as usize;
    let mut j = b.floor().max(0.0) as usize;
    // snap onto nodes so slices through the lattice stay exact
    let on_i = (a - a.round()).abs() < eps;
    let on_j = (b - b.round()).abs() < eps;
    if on_i {
        i = a.round() as usize;
    }
    if on_j {
        j = b.round() as usize;
    }
    let (fa, fb) = (if on_i { 0.0 } else { a - i as f64 }, if on_j { 0.0 } else { b - j as f64 });
    let p00 = field.get(i, j)?;
    let mut out = p00.to_vec();
    if fa == 0.0 && fb == 0.0 {
        return Some(out);
    }
    let p10 = if fa > 0.0 { field.get(i + 1, j)? } else { p00 };
    let p01 = if fb > 0.0 { field.get(i, j + 1)? } else { p00 };
    let p11 = if fa > 0.0 && fb > 0.0 { field.get(i + 1, j + 1)? } else if fa > 0.0 { p10 } else { p01 };
    for m in 0..field.dim {
        out[m] = (1.0 - fa) * (1.0 - fb) * p00[m] + fa * (1.0 - fb) * p10[m] + (1.0 - fa) * fb * p01[m] + fa * fb * p11[m];
    }
    Some(out)
}

/// CSV with columns `x,t,phi0,phi1,...` for each requested time.
pub fn write_slices_csv<W: Write>(field: &GridField, times: &[f64], mut w: W) -> Result<()> {
    let comps: Vec<String> = (0..field.dim).map(|m| format!("phi{m}")).collect();
    writeln!(w, "x,t,{}", comps.join(","))?;
    for &t in times {
        for (x, val) in time_slice(field, t) {
            let vals: Vec<String> = val.iter().map(|a| format!("{a:.17e}")).collect();
            writeln!(w, "{x:.17e},{t:.17e},{}", vals.join(","))?;
        }
    }
    Ok(())
}
