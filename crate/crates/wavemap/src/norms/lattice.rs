use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::TargetManifold;
use crate::nullsolver::{CauchyData, CellField, GridField};

/// Outer norm and variable of a mixed Lebesgue norm; the inner norm is the
/// sup over the other variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixedNorm {
    L2U,
    L1U,
    L2V,
    L1V,
}

impl MixedNorm {
    fn outer_is_u(self) -> bool {
        matches!(self, MixedNorm::L2U | MixedNorm::L1U)
    }

    fn power(self) -> i32 {
        match self {
            MixedNorm::L2U | MixedNorm::L2V => 2,
            MixedNorm::L1U | MixedNorm::L1V => 1,
        }
    }
}

/// Sup per line then trapezoid in the outer variable over `(line, value)`
/// samples with line spacing `h`.
pub fn mixed_norm_samples<I>(samples: I, lines: usize, h: f64, kind: MixedNorm) -> f64
where
    I: IntoIterator<Item = (usize, f64)>,
{
    let mut sup = vec![f64::NAN; lines];
    for (l, val) in samples {
        let s = &mut sup[l];
        if s.is_nan() || val > *s {
            *s = val;
        }
    }
    let present: Vec<usize> = (0..lines).filter(|&l| !sup[l].is_nan()).collect();
    if present.len() < 2 {
        return present.first().map_or(0.0, |&l| sup[l] * h.powf(1.0 / kind.power() as f64));
    }
    let (first, last) = (present[0], *present.last().expect("nonempty"));
    let p = kind.power();
    let mut acc = 0.0;
    for &l in &present {
        let w = if l == first || l == last { 0.5 } else { 1.0 };
        acc += w * sup[l].powi(p);
    }
    (acc * h).powf(1.0 / p as f64)
}

/// Mixed norm of the Euclidean node lengths of a lattice field.
pub fn mixed_norm(field: &GridField, kind: MixedNorm) -> f64 {
    let outer_u = kind.outer_is_u();
    let samples = field.nodes().map(|(i, j)| {
        let val = field.at(i, j).iter().map(|a| a * a).sum::<f64>().sqrt();
        (if outer_u { i } else { j }, val)
    });
    mixed_norm_samples(samples, field.grid.n, field.grid.h, kind)
}

/// Mixed norm of Euclidean lengths of cell values; cell `(i, j)` sits on
/// line `i` (or `j`) at the cell centre.
pub fn mixed_norm_cells(cells: &CellField, kind: MixedNorm) -> f64 {
    let outer_u = kind.outer_is_u();
    let dim = cells.dim;
    let samples = cells.cells().into_iter().zip(cells.values().chunks(dim)).map(|((i, j), c)| {
        let val = c.iter().map(|a| a * a).sum::<f64>().sqrt();
        (if outer_u { i } else { j }, val)
    });
    mixed_norm_samples(samples, cells.grid.n, cells.grid.h, kind)
}

/// `‖f'‖_{L¹} + ‖f‖_{L^∞} + ‖g‖_{L¹}` with lengths in the target metric.
///
/// `∫|f'|` is the sum of the lengths of consecutive differences (measured at
/// the midpoint), `∫|g|` uses the trapezoid rule.
pub fn l11_norm(data: &CauchyData, target: &TargetManifold) -> Result<f64> {
    if data.dim != target.chart_dim() {
        return invalid("data dimension differs from target dimension");
    }
    let samples_f: Vec<&[f64]> = (0..data.len()).map(|k| data.f(k)).collect();
    let samples_g: Vec<&[f64]> = (0..data.len()).map(|k| data.g(k)).collect();
    let g_weights: Vec<f64> = (0..data.len())
        .map(|k| if k == 0 || k + 1 == data.len() { 0.5 } else { 1.0 } * data.spacing)
        .collect();
    l11_parts(&samples_f, &samples_g, &g_weights, target)
}

/// Same norm on raw samples: `f` at consecutive nodes, `g` with quadrature weights.
pub(crate) fn l11_parts(
    f: &[&[f64]],
    g: &[&[f64]],
    g_weights: &[f64],
    target: &TargetManifold,
) -> Result<f64> {
    let dim = target.chart_dim();
    let mut mid = vec![0.0; dim];
    let mut diff = vec![0.0; dim];
    let mut tv = 0.0;
    for w in f.windows(2) {
        for m in 0..dim {
            mid[m] = 0.5 * (w[0][m] + w[1][m]);
            diff[m] = w[1][m] - w[0][m];
        }
        tv += length(target, &mid, &diff)?;
    }
    let sup = f.iter().map(|p| p.iter().map(|a| a * a).sum::<f64>().sqrt()).fold(0.0, f64::max);
    let mut gl1 = 0.0;
    for (k, gk) in g.iter().enumerate() {
        let base = f[k.min(f.len() - 1)];
        gl1 += g_weights[k] * length(target, base, gk)?;
    }
    Ok(tv + sup + gl1)
}

fn length(target: &TargetManifold, base: &[f64], v: &[f64]) -> Result<f64> {
    target.metric_length(base, v)
}

/// Data of a lattice field at `t = 0`: the diagonal as positions and
/// `(φ(t = h/2) - φ(t = -h/2)) / h` at the midpoints as velocities.
pub fn lattice_l11(field: &GridField) -> Result<f64> {
    let g = &field.grid;
    if g.d_min > -1 || g.d_max < 1 {
        return invalid("lattice field needs rows on both sides of t = 0");
    }
    let dim = field.dim;
    let (_, row0) = field.row(0);
    let (_, up) = field.row(1);
    let (_, down) = field.row(-1);
    let f: Vec<&[f64]> = row0.chunks(dim).collect();
    let vel: Vec<f64> = up.iter().zip(down).map(|(a, b)| (a - b) / g.h).collect();
    let gv: Vec<&[f64]> = vel.chunks(dim).collect();
    // velocity at midpoint p uses the base point average of its neighbours
    let base: Vec<Vec<f64>> = (0..gv.len())
        .map(|p| (0..dim).map(|m| 0.5 * (f[p][m] + f[p + 1][m])).collect())
        .collect();
    let mut tv = 0.0;
    let mut diff = vec![0.0; dim];
    for (p, w) in f.windows(2).enumerate() {
        for m in 0..dim {
            diff[m] = w[1][m] - w[0][m];
        }
        tv += length(&field.target, &base[p], &diff)?;
    }
    let sup = f.iter().map(|p| p.iter().map(|a| a * a).sum::<f64>().sqrt()).fold(0.0, f64::max);
    let mut gl1 = 0.0;
    for (p, gp) in gv.iter().enumerate() {
        gl1 += g.h * length(&field.target, &base[p], gp)?;
    }
    Ok(tv + sup + gl1)
}

/// `‖φ_uv‖_{L¹(du dv)} + ‖φ(0)‖_{L^{1,1}}` on the lattice.
pub fn x_norm(field: &GridField) -> Result<f64> {
    let mixed = CellField::mixed_difference(field);
    let h2 = field.grid.h * field.grid.h;
    let l1: f64 = mixed
        .values()
        .chunks(field.dim)
        .map(|c| c.iter().map(|a| a * a).sum::<f64>().sqrt())
        .sum::<f64>()
        * h2;
    Ok(l1 + lattice_l11(field)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nullsolver::{FieldMeta, NullGrid};

    #[test]
    fn constant_on_unit_square() {
        let grid = NullGrid::square(0.1, 0.0, 11).unwrap();
        let f = GridField::from_fn(grid, TargetManifold::flat(1).unwrap(), FieldMeta::default(), |_, _, o| {
            o[0] = 1.0
        });
        assert!((mixed_norm(&f, MixedNorm::L2U) - 1.0).abs() < 1e-14);
        assert!((mixed_norm(&f, MixedNorm::L1V) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn l11_of_constant() {
        let d = CauchyData::from_fn(-1.0, 1.0, 0.1, 2, |_, o| o.copy_from_slice(&[0.6, 0.8]), |_, o| o.fill(0.0))
            .unwrap();
        let s = TargetManifold::sphere_extrinsic(2).unwrap();
        assert!((l11_norm(&d, &s).unwrap() - 1.0).abs() < 1e-15);
    }
}
