//! Closed-form fields: the S¹ solution, geodesic compositions, the Riccati
//! blowup and the Nirenberg substitution.

use serde::Serialize;

use super::profile::ScalarProfile;
use crate::error::{invalid, Error, Result};
use crate::geometry::TargetManifold;
use crate::nullsolver::{CauchyData, CellField, FieldMeta, GridField, NullGrid, DEFAULT_BLOWUP_CEILING};

fn meta(label: &str) -> FieldMeta {
    FieldMeta { scheme_order: 0, projection: false, label: label.into() }
}

fn lattice_coords(grid: &NullGrid) -> Vec<f64> {
    (0..grid.n).map(|i| grid.coord(i)).collect()
}

/// `φ(u, v) = e^{iG(u)/2} e^{-iG(v)/2}` as a point of `S¹ ⊂ R²`.
pub fn s1_exact(g: &ScalarProfile, grid: &NullGrid) -> Result<GridField> {
    g.validate()?;
    let big_g = g.values_at(&lattice_coords(grid));
    let target = TargetManifold::sphere_extrinsic(2)?;
    let mut field = GridField::zeros(grid.clone(), target, meta("s1_exact"));
    let nodes: Vec<(usize, usize)> = field.nodes().collect();
    let vals = field.values_mut();
    for (k, (i, j)) in nodes.into_iter().enumerate() {
        let theta = 0.5 * (big_g[i] - big_g[j]);
        vals[2 * k] = theta.cos();
        vals[2 * k + 1] = theta.sin();
    }
    Ok(field)
}

/// Cauchy data of [`s1_exact`]: `f ≡ (1, 0)`, `g = (0, G')`.
pub fn s1_data(g: &ScalarProfile, x_min: f64, x_max: f64, spacing: f64) -> Result<CauchyData> {
    g.validate()?;
    CauchyData::from_fn(
        x_min,
        x_max,
        spacing,
        2,
        |_, o| {
            o[0] = 1.0;
            o[1] = 0.0;
        },
        |x, o| {
            o[0] = 0.0;
            o[1] = g.derivative(x);
        },
    )
}

/// Sup of the cell mixed differences of a field.
pub fn free_residual(field: &GridField) -> f64 {
    CellField::mixed_difference(field).values().iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn require_scalar(field: &GridField) -> Result<()> {
    if field.dim != 1 {
        return invalid("expected a scalar field");
    }
    Ok(())
}

/// `e^{iεψ}` nodewise, as a point of `S¹ ⊂ R²`.
pub fn geodesic_family(psi: &GridField, epsilon: f64) -> Result<GridField> {
    require_scalar(psi)?;
    let target = TargetManifold::sphere_extrinsic(2)?;
    let values = psi.values().iter().flat_map(|p| [(epsilon * p).cos(), (epsilon * p).sin()]).collect();
    GridField::from_values(psi.grid.clone(), target, meta("geodesic"), values)
}

/// `e^{iψ}` for a discrete-free scalar `ψ`; rejects `ψ` whose mixed
/// differences exceed `tol`.
pub fn geodesic_wave_map(psi: &GridField, tol: f64) -> Result<GridField> {
    require_scalar(psi)?;
    let r = free_residual(psi);
    if !(r <= tol) {
        return invalid(format!("ψ is not discrete-free: mixed difference {r:e} exceeds {tol:e}"));
    }
    geodesic_family(psi, 1.0)
}

/// Where the upwind integration tripped the guard.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GuardTrip {
    pub u: f64,
    pub v: f64,
    pub t: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RiccatiReport {
    /// `1 / max ψ0` over the lattice, `None` when `max ψ0 ≤ 0`.
    pub blowup_time: Option<f64>,
    /// Closed form on the rows with `t < T*`.
    #[serde(skip)]
    pub field: GridField,
    /// Upwind integration of `(∂_t + ∂_x)ψ = ψ²` on the same lattice.
    pub trip: Option<GuardTrip>,
    /// Sup distance between upwind and closed form for `t ≤ T*/2`.
    pub upwind_error: f64,
}

/// `ψ(x, t) = ψ0(x - t) / (1 - ψ0(x - t) t)`; rejects nodes with
/// `ψ0(v) t ≥ 1`.
pub fn riccati_closed_form(psi0: &ScalarProfile, grid: &NullGrid) -> Result<GridField> {
    psi0.validate()?;
    let p0 = psi0.values_at(&lattice_coords(grid));
    let mut values = Vec::with_capacity(grid.node_count());
    for d in grid.d_min..=grid.d_max {
        let js = grid.row_j_start(d);
        let t = grid.row_time(d);
        for j in js..js + grid.row_len(d) {
            let den = 1.0 - p0[j] * t;
            if !(den > 0.0) {
                return invalid(format!("closed form evaluated at t = {t} beyond the blowup time"));
            }
            values.push(p0[j] / den);
        }
    }
    GridField::from_values(grid.clone(), TargetManifold::flat(1)?, meta("riccati"), values)
}

/// Closed form, blowup time and an upwind check on the lattice of spacing
/// `h` whose characteristics leave `[x_min, x_max]`, rows `0 ≤ t ≤ t_max`.
pub fn riccati_blowup(psi0: &ScalarProfile, x_min: f64, x_max: f64, h: f64, t_max: f64) -> Result<RiccatiReport> {
    if !(x_max > x_min) || !(h > 0.0) || !(t_max > 0.0) {
        return invalid("riccati lattice needs a nonempty interval, h > 0 and t_max > 0");
    }
    let n = ((x_max - x_min + 2.0 * t_max) / h).round() as usize + 1;
    let d_max = ((2.0 * t_max / h).round() as i64).min(n as i64 - 1);
    let grid = NullGrid::new(h, x_min, n, 0, d_max)?;
    let p0 = psi0.values_at(&lattice_coords(&grid));
    let max0 = p0.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let blowup_time = (max0 > 0.0).then(|| 1.0 / max0);

    let last_row = match blowup_time {
        Some(ts) => (0..=d_max).take_while(|&d| grid.row_time(d) < ts).last().unwrap_or(0),
        None => d_max,
    };
    let field = riccati_closed_form(psi0, &grid.restrict(0, last_row)?)?;

    let half = blowup_time.map_or(f64::INFINITY, |t| 0.5 * t);
    let mut trip: Option<GuardTrip> = None;
    let mut upwind_error: f64 = 0.0;
    for (j, &start) in p0.iter().enumerate() {
        let mut psi = start;
        for i in j + 1..=(j + d_max as usize).min(n - 1) {
            let next = psi + 0.5 * h * psi * psi;
            let size = (next - psi).abs() / h;
            let t = 0.5 * (i - j) as f64 * h;
            if !(size <= DEFAULT_BLOWUP_CEILING) {
                if trip.map_or(true, |tr| t < tr.t) {
                    trip = Some(GuardTrip { u: grid.u(i), v: grid.v(j), t, value: size });
                }
                break;
            }
            psi = next;
            if t <= half {
                upwind_error = upwind_error.max((psi - start / (1.0 - start * t)).abs());
            }
        }
    }
    Ok(RiccatiReport { blowup_time, field, trip, upwind_error })
}

/// The guard trip as an error, for callers that treat blowup as failure.
pub fn riccati_guard(report: &RiccatiReport) -> Result<()> {
    match report.trip {
        Some(t) => Err(Error::Blowup { u: t.u, v: t.v, value: t.value }),
        None => Ok(()),
    }
}

/// `ψ = 1 - e^φ`.
pub fn nirenberg_transform(phi: &GridField) -> Result<GridField> {
    require_scalar(phi)?;
    let values = phi.values().iter().map(|p| -p.exp_m1()).collect();
    GridField::from_values(phi.grid.clone(), TargetManifold::flat(1)?, meta("nirenberg"), values)
}

/// `φ = log(1 - ψ)`; requires `sup |ψ| < 1`.
pub fn nirenberg_inverse(psi: &GridField) -> Result<GridField> {
    require_scalar(psi)?;
    let sup = psi.sup_norm();
    if !(sup < 1.0) {
        return invalid(format!("inverse substitution needs sup |ψ| < 1, found {sup}"));
    }
    let values = psi.values().iter().map(|p| (-p).ln_1p()).collect();
    GridField::from_values(psi.grid.clone(), TargetManifold::flat(1)?, meta("nirenberg_inverse"), values)
}

/// Sup over cells of `|D_uv φ + D_u φ D_v φ|` with cell-centred
/// differences; `ψ = 1 - e^φ` is free exactly when `φ_uv = -φ_u φ_v`.
pub fn nirenberg_residual(phi: &GridField) -> Result<f64> {
    require_scalar(phi)?;
    let h = phi.grid.h;
    let cells = CellField::zeros(phi.grid.clone(), 1).cells();
    let mut sup: f64 = 0.0;
    for (i, j) in cells {
        let [p00, p10, p01, p11] = phi.cell(i, j).expect("cell corners");
        let (a, b, c, d) = (p00[0], p10[0], p01[0], p11[0]);
        let du = 0.5 * ((b - a) + (d - c)) / h;
        let dv = 0.5 * ((c - a) + (d - b)) / h;
        let duv = ((d - b) - (c - a)) / (h * h);
        sup = sup.max((duv + du * dv).abs());
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> NullGrid {
        NullGrid::new(0.05, -1.0, 41, -10, 10).unwrap()
    }

    #[test]
    fn zero_profile_gives_constant_map() {
        let f = s1_exact(&ScalarProfile::Constant { value: 0.0 }, &grid()).unwrap();
        assert!(f.values().chunks(2).all(|p| p == [1.0, 0.0]));
    }

    #[test]
    fn linear_profile_rotates_in_time() {
        let g = grid();
        let f = s1_exact(&ScalarProfile::Linear { slope: 1.0 }, &g).unwrap();
        for (i, j) in f.nodes() {
            let (_, t) = g.xt(i, j);
            let p = f.at(i, j);
            assert!((p[0] - t.cos()).abs() < 1e-14 && (p[1] - t.sin()).abs() < 1e-14);
        }
    }

    #[test]
    fn riccati_constant_data() {
        let r = riccati_blowup(&ScalarProfile::Constant { value: 1.0 }, -1.0, 1.0, 0.01, 1.5).unwrap();
        assert_eq!(r.blowup_time, Some(1.0));
        assert!(r.trip.is_some());
        let z = riccati_blowup(&ScalarProfile::Constant { value: 0.0 }, -1.0, 1.0, 0.1, 1.0).unwrap();
        assert_eq!(z.blowup_time, None);
        assert!(z.trip.is_none());
        assert_eq!(z.field.sup_norm(), 0.0);
    }

    #[test]
    fn riccati_half_reaches_one_at_unit_time() {
        let g = NullGrid::new(0.25, 0.0, 9, 0, 8).unwrap();
        let f = riccati_closed_form(&ScalarProfile::Constant { value: 0.5 }, &g).unwrap();
        let (_, row) = f.row(8);
        assert!(row.iter().all(|&p| (p - 1.0).abs() < 1e-15));
        let past = NullGrid::new(0.25, 0.0, 9, 0, 8).unwrap();
        assert!(riccati_closed_form(&ScalarProfile::Constant { value: 1.0 }, &past).is_err());
    }

    #[test]
    fn nirenberg_zero_and_domain_guard() {
        let g = grid();
        let zero = GridField::zeros(g.clone(), TargetManifold::flat(1).unwrap(), FieldMeta::default());
        assert_eq!(nirenberg_transform(&zero).unwrap().sup_norm(), 0.0);
        let one = GridField::from_fn(g, TargetManifold::flat(1).unwrap(), FieldMeta::default(), |u, _, o| {
            o[0] = if u > 0.5 { 1.0 } else { 0.2 }
        });
        assert!(nirenberg_inverse(&one).is_err());
    }
}
