use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if forward {
            p.plan_fft_forward(n)
        } else {
            p.plan_fft_inverse(n)
        }
    })
}

/// In-place forward transform with `1/n` normalisation.
pub fn fft_forward(buf: &mut [Complex64]) {
    let n = buf.len();
    plan(n, true).process(buf);
    let s = 1.0 / n as f64;
    buf.iter_mut().for_each(|c| *c *= s);
}

/// In-place inverse of [`fft_forward`].
pub fn fft_inverse(buf: &mut [Complex64]) {
    let n = buf.len();
    plan(n, false).process(buf);
}

/// Signed frequency index of FFT slot `k` on `n` points.
pub fn signed_index(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Angular frequency `2π k / L` of FFT slot `k`.
pub fn angular(k: usize, n: usize, period: f64) -> f64 {
    2.0 * PI * signed_index(k, n) as f64 / period
}

/// `⟨ξ⟩ = (1 + ξ²)^{1/2}`.
pub fn bracket(xi: f64) -> f64 {
    (1.0 + xi * xi).sqrt()
}

/// Periodic samples of a function of one or two variables with cached
/// Fourier coefficients.
///
/// Samples sit at `origin + j L / n` in each variable. Coefficients use the
/// forward transform with `1/n` normalisation, so `e^{i ξ x}` has
/// coefficient 1 at its frequency. Norms use the continuum normalisation
/// `‖f‖² = L Σ_k |c_k|² w(ξ_k)²` (times `L_u L_v` in two variables), which
/// agrees with `∫ |f|²` by Parseval.
#[derive(Debug, Clone)]
pub struct SpectralField {
    shape: (usize, usize),
    period: (f64, f64),
    origin: (f64, f64),
    samples: Vec<Complex64>,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn from_samples_1d(samples: Vec<Complex64>, period: f64, origin: f64) -> Result<Self> {
        if samples.is_empty() || !(period > 0.0) {
            return invalid("spectral field needs samples and a positive period");
        }
        let mut coeffs = samples.clone();
        fft_forward(&mut coeffs);
        Ok(Self { shape: (samples.len(), 1), period: (period, 1.0), origin: (origin, 0.0), samples, coeffs })
    }

    pub fn from_real_1d(samples: &[f64], period: f64, origin: f64) -> Result<Self> {
        Self::from_samples_1d(samples.iter().map(|&a| Complex64::new(a, 0.0)).collect(), period, origin)
    }

    pub fn from_fn_1d<F: Fn(f64) -> Complex64>(n: usize, period: f64, origin: f64, f: F) -> Result<Self> {
        let dx = period / n as f64;
        Self::from_samples_1d((0..n).map(|j| f(origin + j as f64 * dx)).collect(), period, origin)
    }

    pub fn from_coefficients_1d(coeffs: Vec<Complex64>, period: f64, origin: f64) -> Result<Self> {
        if coeffs.is_empty() || !(period > 0.0) {
            return invalid("spectral field needs coefficients and a positive period");
        }
        let mut samples = coeffs.clone();
        fft_inverse(&mut samples);
        Ok(Self { shape: (coeffs.len(), 1), period: (period, 1.0), origin: (origin, 0.0), samples, coeffs })
    }

    /// Row-major samples `[i_1][i_2]` of a function of two variables.
    pub fn from_samples_2d(
        samples: Vec<Complex64>,
        shape: (usize, usize),
        period: (f64, f64),
        origin: (f64, f64),
    ) -> Result<Self> {
        if shape.0 * shape.1 != samples.len() || samples.is_empty() || !(period.0 > 0.0 && period.1 > 0.0) {
            return invalid("2D spectral field shape does not match its samples");
        }
        let mut coeffs = samples.clone();
        fft2(&mut coeffs, shape, true);
        Ok(Self { shape, period, origin, samples, coeffs })
    }

    pub fn from_fn_2d<F: Fn(f64, f64) -> Complex64>(
        shape: (usize, usize),
        period: (f64, f64),
        origin: (f64, f64),
        f: F,
    ) -> Result<Self> {
        let (d1, d2) = (period.0 / shape.0 as f64, period.1 / shape.1 as f64);
        let mut s = Vec::with_capacity(shape.0 * shape.1);
        for i in 0..shape.0 {
            for j in 0..shape.1 {
                s.push(f(origin.0 + i as f64 * d1, origin.1 + j as f64 * d2));
            }
        }
        Self::from_samples_2d(s, shape, period, origin)
    }

    pub fn from_coefficients_2d(
        coeffs: Vec<Complex64>,
        shape: (usize, usize),
        period: (f64, f64),
        origin: (f64, f64),
    ) -> Result<Self> {
        if shape.0 * shape.1 != coeffs.len() || coeffs.is_empty() {
            return invalid("2D spectral field shape does not match its coefficients");
        }
        let mut samples = coeffs.clone();
        fft2(&mut samples, shape, false);
        Ok(Self { shape, period, origin, samples, coeffs })
    }

    pub fn is_2d(&self) -> bool {
        self.shape.1 > 1
    }

    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    pub fn period(&self) -> (f64, f64) {
        self.period
    }

    pub fn origin(&self) -> (f64, f64) {
        self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.period.0 / self.shape.0 as f64
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Inverse transform of the cached coefficients.
    pub fn reconstruct(&self) -> Vec<Complex64> {
        let mut s = self.coeffs.clone();
        if self.is_2d() {
            fft2(&mut s, self.shape, false);
        } else {
            fft_inverse(&mut s);
        }
        s
    }

    /// Angular frequencies of slot `k` (first variable) and `l` (second).
    pub fn frequencies(&self, k: usize, l: usize) -> (f64, f64) {
        (angular(k, self.shape.0, self.period.0), angular(l, self.shape.1, self.period.1))
    }

    fn cell_measure(&self) -> f64 {
        if self.is_2d() {
            self.period.0 * self.period.1
        } else {
            self.period.0
        }
    }

    /// `(measure Σ |c|² w²)^{1/2}` for a weight of the angular frequencies.
    pub fn weighted_norm<W: Fn(f64, f64) -> f64>(&self, w: W) -> f64 {
        let mut acc = 0.0;
        for k in 0..self.shape.0 {
            for l in 0..self.shape.1 {
                let (a, b) = self.frequencies(k, l);
                let c = self.coeffs[k * self.shape.1 + l];
                let wt = w(a, b);
                acc += c.norm_sqr() * wt * wt;
            }
        }
        (acc * self.cell_measure()).sqrt()
    }

    /// `(Σ |samples|² ΔxΔt)^{1/2}`.
    pub fn sample_l2(&self) -> f64 {
        let cell = self.cell_measure() / (self.shape.0 * self.shape.1) as f64;
        (self.samples.iter().map(|c| c.norm_sqr()).sum::<f64>() * cell).sqrt()
    }

    /// Applies a Fourier multiplier `m(ξ₁, ξ₂)`.
    pub fn apply_multiplier<M: Fn(f64, f64) -> Complex64>(&self, m: M) -> SpectralField {
        let mut coeffs = self.coeffs.clone();
        for k in 0..self.shape.0 {
            for l in 0..self.shape.1 {
                let (a, b) = self.frequencies(k, l);
                coeffs[k * self.shape.1 + l] *= m(a, b);
            }
        }
        let mut samples = coeffs.clone();
        if self.is_2d() {
            fft2(&mut samples, self.shape, false);
        } else {
            fft_inverse(&mut samples);
        }
        SpectralField { shape: self.shape, period: self.period, origin: self.origin, samples, coeffs }
    }

    pub fn mean(&self) -> Complex64 {
        self.coeffs[0]
    }
}

/// Two-dimensional transform over a row-major array.
pub fn fft2(buf: &mut [Complex64], shape: (usize, usize), forward: bool) {
    let (n1, n2) = shape;
    for row in buf.chunks_mut(n2) {
        if forward {
            fft_forward(row);
        } else {
            fft_inverse(row);
        }
    }
    let mut col = vec![Complex64::new(0.0, 0.0); n1];
    for j in 0..n2 {
        for i in 0..n1 {
            col[i] = buf[i * n2 + j];
        }
        if forward {
            fft_forward(&mut col);
        } else {
            fft_inverse(&mut col);
        }
        for i in 0..n1 {
            buf[i * n2 + j] = col[i];
        }
    }
}

/// `‖f‖_{H^s}` with weight `⟨ξ⟩^s`, or `‖f‖_{Ḣ^s}` with `|ξ|^s` and the
/// zero mode dropped.
pub fn sobolev_norm(f: &SpectralField, s: f64, homogeneous: bool) -> f64 {
    sobolev_norm_flagged(f, s, homogeneous).0
}

/// Like [`sobolev_norm`], also reporting whether a nonzero mean was
/// excluded by the homogeneous norm.
pub fn sobolev_norm_flagged(f: &SpectralField, s: f64, homogeneous: bool) -> (f64, bool) {
    if homogeneous {
        let flagged = f.mean().norm() > 1e-14 * f.sample_l2().max(f64::MIN_POSITIVE);
        let v = f.weighted_norm(|a, _| if a == 0.0 { 0.0 } else { a.abs().powf(s) });
        (v, flagged)
    } else {
        (f.weighted_norm(|a, _| bracket(a).powf(s)), false)
    }
}

/// `H^{s,δ}` norm of a field of `(x, t)`: weight `⟨|τ|+|ξ|⟩^s ⟨|τ|-|ξ|⟩^δ`.
pub fn hsd_norm(phi: &SpectralField, s: f64, delta: f64) -> f64 {
    phi.weighted_norm(|xi, tau| bracket(tau.abs() + xi.abs()).powf(s) * bracket(tau.abs() - xi.abs()).powf(delta))
}

/// `H^{s,δ}` weight evaluated on a field of `(u, v)`, using `ξ = μ + ν`,
/// `τ = μ - ν` for the mode `e^{i(μu + νv)}`.
pub fn hsd_norm_null(phi: &SpectralField, s: f64, delta: f64) -> f64 {
    phi.weighted_norm(|mu, nu| {
        let (xi, tau) = (mu + nu, mu - nu);
        bracket(tau.abs() + xi.abs()).powf(s) * bracket(tau.abs() - xi.abs()).powf(delta)
    })
}

/// `‖φ‖_{H^{s₁}_u H^{s₂}_v}`.
pub fn product_sobolev_norm(phi: &SpectralField, s1: f64, s2: f64) -> f64 {
    phi.weighted_norm(|mu, nu| bracket(mu).powf(s1) * bracket(nu).powf(s2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_mode_and_parseval() {
        let k = 5.0;
        let f = SpectralField::from_fn_1d(64, 2.0 * PI, 0.0, |x| Complex64::new(0.0, k * x).exp()).unwrap();
        let expect = (2.0 * PI).sqrt() * bracket(k).powf(0.7);
        assert!((sobolev_norm(&f, 0.7, false) - expect).abs() < 1e-12 * expect);
        assert!((f.sample_l2() - sobolev_norm(&f, 0.0, false)).abs() < 1e-12);
        let back = f.reconstruct();
        for (a, b) in back.iter().zip(f.samples()) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn separable_product_norm_factorises() {
        let a = |u: f64| Complex64::new((2.0 * u).cos(), 0.0);
        let b = |v: f64| Complex64::new(0.0, 3.0 * v).exp() + 0.5;
        let p = SpectralField::from_fn_2d((32, 32), (2.0 * PI, 2.0 * PI), (0.0, 0.0), |u, v| a(u) * b(v)).unwrap();
        let fa = SpectralField::from_fn_1d(32, 2.0 * PI, 0.0, a).unwrap();
        let fb = SpectralField::from_fn_1d(32, 2.0 * PI, 0.0, b).unwrap();
        let lhs = product_sobolev_norm(&p, 0.8, -0.3);
        let rhs = sobolev_norm(&fa, 0.8, false) * sobolev_norm(&fb, -0.3, false);
        assert!((lhs - rhs).abs() < 1e-12 * rhs);
    }
}
