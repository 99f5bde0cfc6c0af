//! Rescaling: the localized rescaled data of the Rellich-type lemma and the
//! normalized global norms of rescaled lattice solutions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::dtilde::{standard_bump, tilde_d_multiplier};
use super::estimates::fit_slope;
use super::lattice::{mixed_norm_samples, MixedNorm};
use super::spectral::{bracket, fft2, fft_forward, fft_inverse, SpectralField};
use crate::error::{invalid, Result};
use crate::nullsolver::{CellField, GridField};
use crate::quadrature::integrate;

/// Periodic grid on `[-period/2, period/2)` used for the rescaled data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RescaleGrid {
    pub samples: usize,
    pub period: f64,
}

impl Default for RescaleGrid {
    fn default() -> Self {
        Self { samples: 1 << 14, period: 8.0 }
    }
}

/// Cutoff `χ`: the standard bump on `[-1, 1]`.
pub fn standard_cutoff(x: f64) -> f64 {
    standard_bump(x)
}

/// Unit-mass bump `ψ` supported on `[-1, 1]`.
pub fn unit_mass_bump(x: f64) -> f64 {
    static MASS: std::sync::OnceLock<f64> = std::sync::OnceLock::new();
    let mass = *MASS.get_or_init(|| integrate(standard_bump, -1.0, 1.0, 1e-15));
    standard_bump(x) / mass
}

/// `f̃ = χ (f(·/λ) - f̄)` and `g̃ = λ^{-1} χ g(·/λ)` with
/// `f̄ = ∫ f(x/λ) ψ(x) dx`, sampled on `grid`.
pub fn rescale_and_localize<F, G, X, P>(
    f: F,
    g: G,
    lambda: f64,
    chi: X,
    psi: P,
    grid: &RescaleGrid,
) -> Result<(SpectralField, SpectralField)>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
    X: Fn(f64) -> f64,
    P: Fn(f64) -> f64,
{
    if !(lambda > 0.0) || grid.samples < 8 || !(grid.period > 0.0) {
        return invalid("rescaling needs λ > 0 and a nontrivial grid");
    }
    let half = 0.5 * grid.period;
    let mass = integrate(&psi, -half, half, 1e-13);
    if (mass - 1.0).abs() > 1e-8 {
        return invalid(format!("ψ must have unit mass, found {mass}"));
    }
    let fbar = integrate(|x| f(x / lambda) * psi(x), -half, half, 1e-13);
    let ft = SpectralField::from_fn_1d(grid.samples, grid.period, -half, |x| {
        Complex64::new(chi(x) * (f(x / lambda) - fbar), 0.0)
    })?;
    let gt = SpectralField::from_fn_1d(grid.samples, grid.period, -half, |x| {
        Complex64::new(chi(x) * g(x / lambda) / lambda, 0.0)
    })?;
    Ok((ft, gt))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RellichReport {
    pub delta: f64,
    pub s_tilde: f64,
    pub lambdas: Vec<f64>,
    /// `‖f̃‖_{H^δ} + ‖g̃‖_{H^{δ-1}}` for each `λ`.
    pub norms: Vec<f64>,
    /// Fitted slope of `log norm` against `log λ`.
    pub decay_exponent: f64,
    pub fit_residual: f64,
}

/// `λ = 2, 4, …, 256`.
pub fn default_lambdas() -> Vec<f64> {
    (1..=8).map(|p| f64::powi(2.0, p)).collect()
}

/// Sweeps `λ` and fits the decay of the rescaled localized data norm.
pub fn verify_rellich<F, G>(
    f: F,
    g: G,
    delta: f64,
    s_tilde: f64,
    lambdas: &[f64],
    grid: &RescaleGrid,
) -> Result<RellichReport>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    if !(delta < s_tilde) || delta > 1.0 {
        return invalid("the rescaling lemma needs δ < s̃ and δ ≤ 1");
    }
    if lambdas.is_empty() || lambdas.iter().any(|&l| !(l > 0.0)) {
        return invalid("λ sweep must be nonempty and positive");
    }
    let mut norms = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        let (ft, gt) = rescale_and_localize(&f, &g, l, standard_cutoff, unit_mass_bump, grid)?;
        norms.push(super::spectral::sobolev_norm(&ft, delta, false) + super::spectral::sobolev_norm(&gt, delta - 1.0, false));
    }
    let xs: Vec<f64> = lambdas.iter().map(|l| l.ln()).collect();
    let ys: Vec<f64> = norms.iter().map(|n| n.max(f64::MIN_POSITIVE).ln()).collect();
    let (decay_exponent, fit_residual) = fit_slope(&xs, &ys);
    Ok(RellichReport { delta, s_tilde, lambdas: lambdas.to_vec(), norms, decay_exponent, fit_residual })
}

/// `f(·/λ)` on the dilated grid: same samples, period and origin times `λ`.
pub fn dilate(f: &SpectralField, lambda: f64) -> Result<SpectralField> {
    if f.is_2d() || !(lambda > 0.0) {
        return invalid("dilation acts on one-variable fields with λ > 0");
    }
    SpectralField::from_samples_1d(f.samples().to_vec(), f.period().0 * lambda, f.origin().0 * lambda)
}

/// Normalized global quantities of a rescaled solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescaledNorms {
    pub lambda: f64,
    /// `‖D̃_u^{s-1} φ^λ_u‖_{L²_u L^∞_v} / λ^{1/2-s}`.
    pub u_quantity: f64,
    /// `‖D̃_v^{s-1} φ^λ_v‖_{L²_v L^∞_u} / λ^{1/2-s}`.
    pub v_quantity: f64,
    /// `‖φ^λ_{uv}‖_{H^{s-1}_u H^{s-1}_v} / λ^{1-2s}`.
    pub uv_quantity: f64,
}

fn padded_len(extent: usize) -> usize {
    (4 * extent.max(2)).next_power_of_two()
}

/// Applies `D̃^{s-1}` along every `u` line (or `v` line) to the first
/// differences of the field, lines zero-extended to a period at least four
/// times the lattice width. Returns `(outer index, value)` pairs.
fn dtilde_lines(field: &GridField, s: f64, h: f64, along_u: bool) -> Result<(Vec<(usize, f64)>, usize)> {
    let g = &field.grid;
    let n = g.n;
    let dim = field.dim;
    let p = padded_len(n);
    let m = tilde_d_multiplier(p, p as f64 * h, s - 1.0)?;
    // line value at padded slot q corresponds to edge index q (edge between q and q + 1)
    let mut out = Vec::new();
    let mut per_edge: Vec<Vec<f64>> = vec![vec![0.0; n]; p];
    for line in 0..n {
        let mut acc = vec![0.0; p];
        let mut any = false;
        for comp in 0..dim {
            let mut buf = vec![Complex64::new(0.0, 0.0); p];
            for k in 0..n.saturating_sub(1) {
                let (a, b) = if along_u {
                    (field.get(k, line), field.get(k + 1, line))
                } else {
                    (field.get(line, k), field.get(line, k + 1))
                };
                if let (Some(a), Some(b)) = (a, b) {
                    buf[k] = Complex64::new((b[comp] - a[comp]) / h, 0.0);
                    any = true;
                }
            }
            if !any {
                break;
            }
            fft_forward(&mut buf);
            buf.iter_mut().zip(m.iter()).for_each(|(c, w)| *c *= w);
            fft_inverse(&mut buf);
            for (a, c) in acc.iter_mut().zip(&buf) {
                *a += c.re * c.re;
            }
        }
        if any {
            for (q, a) in acc.iter().enumerate() {
                per_edge[q][line] = a.sqrt();
            }
        }
    }
    for (q, vals) in per_edge.iter().enumerate() {
        out.push((q, vals.iter().cloned().fold(0.0, f64::max)));
    }
    Ok((out, p))
}

/// Rescales the lattice field by `λ` (spacing `λh`) and reports the three
/// normalized global quantities at regularity `s`.
pub fn track_rescaled_solution_norms(field: &GridField, lambda: f64, s: f64) -> Result<RescaledNorms> {
    if !(lambda > 0.0) {
        return invalid("λ must be positive");
    }
    let h = field.grid.h * lambda;
    let (u_samples, pu) = dtilde_lines(field, s, h, true)?;
    let (v_samples, pv) = dtilde_lines(field, s, h, false)?;
    let u_norm = mixed_norm_samples(u_samples, pu, h, MixedNorm::L2U);
    let v_norm = mixed_norm_samples(v_samples, pv, h, MixedNorm::L2U);
    let uv = uv_norm(field, lambda, s)?;
    Ok(RescaledNorms {
        lambda,
        u_quantity: u_norm / lambda.powf(0.5 - s),
        v_quantity: v_norm / lambda.powf(0.5 - s),
        uv_quantity: uv / lambda.powf(1.0 - 2.0 * s),
    })
}

fn uv_norm(field: &GridField, lambda: f64, s: f64) -> Result<f64> {
    let mixed = CellField::mixed_difference(field);
    let n = field.grid.n;
    let h = field.grid.h * lambda;
    let scale = 1.0 / (lambda * lambda);
    let p = padded_len(n);
    let period = p as f64 * h;
    let mut acc = 0.0;
    for comp in 0..field.dim {
        let mut buf = vec![Complex64::new(0.0, 0.0); p * p];
        for (idx, (i, j)) in mixed.cells().into_iter().enumerate() {
            buf[i * p + j] = Complex64::new(mixed.values()[idx * field.dim + comp] * scale, 0.0);
        }
        fft2(&mut buf, (p, p), true);
        for k in 0..p {
            let wk = bracket(super::spectral::angular(k, p, period)).powf(s - 1.0);
            for l in 0..p {
                let wl = bracket(super::spectral::angular(l, p, period)).powf(s - 1.0);
                acc += buf[k * p + l].norm_sqr() * (wk * wl).powi(2);
            }
        }
    }
    Ok((acc * period * period).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_are_killed() {
        let (ft, gt) =
            rescale_and_localize(|_| 2.5, |_| 0.0, 8.0, standard_cutoff, unit_mass_bump, &RescaleGrid::default())
                .unwrap();
        assert!(ft.sample_l2() < 1e-13);
        assert_eq!(gt.sample_l2(), 0.0);
    }

    #[test]
    fn dilation_scales_homogeneous_norm() {
        let f = SpectralField::from_fn_1d(256, 8.0, -4.0, |x| Complex64::new((-x * x).exp() * x, 0.0)).unwrap();
        let s = 0.7;
        let a = super::super::spectral::sobolev_norm(&f, s, true);
        let b = super::super::spectral::sobolev_norm(&dilate(&f, 3.0).unwrap(), s, true);
        assert!((b - 3f64.powf(0.5 - s) * a).abs() < 1e-13 * a);
    }
}
