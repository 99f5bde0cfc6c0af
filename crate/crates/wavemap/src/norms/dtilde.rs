//! Compact-kernel fractional operators `D̃^s` and the localized `L` norm.
//!
//! The bump is the normalized autocorrelation `η = (β * β) / (β * β)(0)` of
//! the standard profile `β(y) = exp(1 - 1/(1 - 4y²))` on `[-1/2, 1/2]`. It
//! is smooth, supported on `[-1, 1]`, has `η(0) = 1` and `η̂ = |β̂|² ≥ 0`.
//!
//! `m_s` is computed on the sample grid: the discrete kernel of `⟨ξ⟩^s` is
//! multiplied by `η` and transformed back. The resulting operator has a
//! kernel supported exactly in `supp η` and `m_0 ≡ 1`. Grids coarser than
//! `1/8` are refined before tabulating.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use super::spectral::{angular, bracket, fft_forward, fft_inverse, SpectralField};
use crate::error::{invalid, Result};
use crate::quadrature::integrate;

/// Spacing of the window centres of the `L` norm cover.
pub const WINDOW_STEP: f64 = 0.5;

/// Standard profile `exp(1 - 1/(1 - x²))` on `(-1, 1)`, equal to 1 at 0.
pub fn standard_bump(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - x * x)).exp()
    }
}

fn half_bump(y: f64) -> f64 {
    standard_bump(2.0 * y)
}

fn autocorrelation(x: f64) -> f64 {
    let x = x.abs();
    if x >= 1.0 {
        return 0.0;
    }
    integrate(|y| half_bump(y) * half_bump(x - y), x - 0.5, 0.5, 1e-14)
}

/// The bump `η` of the operators `D̃^s`.
pub fn eta(x: f64) -> f64 {
    static NORM: OnceLock<f64> = OnceLock::new();
    let n = *NORM.get_or_init(|| autocorrelation(0.0));
    autocorrelation(x) / n
}

type Key = (usize, u64, u64);

fn multiplier_cache() -> &'static Mutex<HashMap<Key, Arc<Vec<f64>>>> {
    static CACHE: OnceLock<Mutex<HashMap<Key, Arc<Vec<f64>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `m_s(ξ_k)` for every FFT slot `k` of an `n`-point grid of period `period`.
pub fn tilde_d_multiplier(n: usize, period: f64, s: f64) -> Result<Arc<Vec<f64>>> {
    if n < 2 || !(period >= 2.0) {
        return invalid("D̃ needs at least two samples and a period of at least 2");
    }
    let key = (n, period.to_bits(), s.to_bits());
    if let Some(m) = multiplier_cache().lock().expect("cache lock").get(&key) {
        return Ok(m.clone());
    }
    let dx = period / n as f64;
    let r = (8.0 * dx).ceil().max(1.0) as usize;
    let nf = n * r;
    let dxf = period / nf as f64;
    let mut kernel: Vec<Complex64> =
        (0..nf).map(|k| Complex64::new(bracket(angular(k, nf, period)).powf(s), 0.0)).collect();
    fft_inverse(&mut kernel);
    for (j, c) in kernel.iter_mut().enumerate() {
        let x = if j <= nf / 2 { j as f64 } else { j as f64 - nf as f64 } * dxf;
        *c *= eta(x);
    }
    fft_forward(&mut kernel);
    let m: Vec<f64> = (0..n)
        .map(|k| {
            let signed = if k <= n / 2 { k } else { nf - (n - k) };
            kernel[signed].re
        })
        .collect();
    let m = Arc::new(m);
    multiplier_cache().lock().expect("cache lock").insert(key, m.clone());
    Ok(m)
}

/// `D̃^s f` for a one-variable field.
pub fn tilde_d(f: &SpectralField, s: f64) -> Result<SpectralField> {
    if f.is_2d() {
        return invalid("tilde_d acts on one-variable fields; use tilde_d_axis");
    }
    let (n, _) = f.shape();
    let m = tilde_d_multiplier(n, f.period().0, s)?;
    let coeffs: Vec<Complex64> = f.coefficients().iter().zip(m.iter()).map(|(c, w)| c * w).collect();
    SpectralField::from_coefficients_1d(coeffs, f.period().0, f.origin().0)
}

/// `D̃^s` in the first (`axis = 0`, `u`) or second (`axis = 1`, `v`) variable.
pub fn tilde_d_axis(f: &SpectralField, s: f64, axis: usize) -> Result<SpectralField> {
    if !f.is_2d() || axis > 1 {
        return invalid("tilde_d_axis needs a two-variable field and axis 0 or 1");
    }
    let (n1, n2) = f.shape();
    let (p1, p2) = f.period();
    let m = if axis == 0 { tilde_d_multiplier(n1, p1, s)? } else { tilde_d_multiplier(n2, p2, s)? };
    let mut coeffs = f.coefficients().to_vec();
    for k in 0..n1 {
        for l in 0..n2 {
            coeffs[k * n2 + l] *= m[if axis == 0 { k } else { l }];
        }
    }
    SpectralField::from_coefficients_2d(coeffs, f.shape(), f.period(), f.origin())
}

/// Range of `m_s(ξ)/⟨ξ⟩^s` and the minimum of `m_s` over `|ξ| ≤ band`.
#[derive(Debug, Clone, Copy)]
pub struct MultiplierBounds {
    pub lower: f64,
    pub upper: f64,
    pub min_multiplier: f64,
}

pub fn multiplier_bounds(n: usize, period: f64, s: f64, band: f64) -> Result<MultiplierBounds> {
    let m = tilde_d_multiplier(n, period, s)?;
    let mut b = MultiplierBounds { lower: f64::INFINITY, upper: 0.0, min_multiplier: f64::INFINITY };
    for (k, &mk) in m.iter().enumerate() {
        let xi = angular(k, n, period);
        if xi.abs() > band {
            continue;
        }
        let q = mk / bracket(xi).powf(s);
        b.lower = b.lower.min(q);
        b.upper = b.upper.max(q);
        b.min_multiplier = b.min_multiplier.min(mk);
    }
    Ok(b)
}

fn window_cache() -> &'static Mutex<HashMap<Key, Arc<Vec<Vec<f64>>>>> {
    static CACHE: OnceLock<Mutex<HashMap<Key, Arc<Vec<Vec<f64>>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Samples of the partition `η_I = b_I / Σ_J b_J` on an `n`-point periodic
/// grid starting at `origin`, where `b_I` is the standard bump on the unit
/// interval centred at the `I`-th multiple of [`WINDOW_STEP`].
pub fn window_partition(n: usize, period: f64, origin: f64) -> Result<Arc<Vec<Vec<f64>>>> {
    let count = period / WINDOW_STEP;
    if (count - count.round()).abs() > 1e-9 || count.round() < 4.0 {
        return invalid("window cover needs a period that is a multiple of 1/2 and at least 2");
    }
    let key = (n, period.to_bits(), origin.to_bits());
    if let Some(w) = window_cache().lock().expect("cache lock").get(&key) {
        return Ok(w.clone());
    }
    let count = count.round() as usize;
    let dx = period / n as f64;
    let mut raw = vec![vec![0.0; n]; count];
    let mut total = vec![0.0; n];
    for (q, row) in raw.iter_mut().enumerate() {
        let c = q as f64 * WINDOW_STEP;
        for (j, out) in row.iter_mut().enumerate() {
            let x = origin + j as f64 * dx - c;
            let d = x - period * (x / period).round();
            *out = standard_bump(d / WINDOW_STEP);
            total[j] += *out;
        }
    }
    for row in raw.iter_mut() {
        for (a, t) in row.iter_mut().zip(&total) {
            *a /= t;
        }
    }
    let w = Arc::new(raw);
    window_cache().lock().expect("cache lock").insert(key, w.clone());
    Ok(w)
}

fn localized_parts(f: &SpectralField, s: f64, dtilde: bool) -> Result<Vec<f64>> {
    if f.is_2d() {
        return invalid("localized norms act on one-variable fields");
    }
    let (n, _) = f.shape();
    let (period, origin) = (f.period().0, f.origin().0);
    let windows = window_partition(n, period, origin)?;
    windows
        .iter()
        .map(|w| {
            let piece: Vec<Complex64> = f.samples().iter().zip(w).map(|(a, b)| a * b).collect();
            let piece = SpectralField::from_samples_1d(piece, period, origin)?;
            if dtilde {
                Ok(tilde_d(&piece, s)?.sample_l2())
            } else {
                Ok(super::spectral::sobolev_norm(&piece, s, false))
            }
        })
        .collect()
}

/// `sup_I ‖D̃^s(η_I f)‖_{L²}`.
pub fn localized_l_norm(f: &SpectralField, s: f64) -> Result<f64> {
    Ok(localized_parts(f, s, true)?.into_iter().fold(0.0, f64::max))
}

/// `(Σ_I ‖η_I f‖²_{H^s})^{1/2}`.
pub fn localized_square_sum_norm(f: &SpectralField, s: f64) -> Result<f64> {
    Ok(localized_parts(f, s, false)?.iter().map(|a| a * a).sum::<f64>().sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta_is_normalised_bump() {
        assert!((eta(0.0) - 1.0).abs() < 1e-14);
        assert_eq!(eta(1.0), 0.0);
        assert!((eta(0.3) - eta(-0.3)).abs() < 1e-15);
        assert!(eta(0.5) > 0.0 && eta(0.5) < 1.0);
    }

    #[test]
    fn zero_order_is_identity() {
        let m = tilde_d_multiplier(64, 4.0, 0.0).unwrap();
        for v in m.iter() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn windows_partition_unity() {
        let w = window_partition(80, 4.0, -2.0).unwrap();
        assert_eq!(w.len(), 8);
        for j in 0..80 {
            let s: f64 = w.iter().map(|r| r[j]).sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
    }
}
