//! Empirical checks of the bilinear, smoothing and commutator estimates.
//!
//! Fields live on the torus of period [`ENSEMBLE_PERIOD`] sampled at
//! `M = 4N` points, with Fourier support in `|k| < N`, so products of two
//! members are resolved without aliasing. Two-variable fields are kept in
//! low-rank form `Σ_r a_r(u) b_r(v)`; their product-Sobolev norms come from
//! Gram matrices of the factors, `‖Σ a_r ⊗ b_r‖² = Σ_{r,q} ⟨a_r, a_q⟩⟨b_r, b_q⟩`.
//! The dense path (full 2D transforms) exists for the `integ` probe with
//! diagonal fields, which have rank of order `N`.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dtilde::{standard_bump, tilde_d_multiplier, window_partition};
use super::spectral::{angular, bracket, fft2, fft_forward, fft_inverse};
use crate::error::{invalid, Error, Result};

pub const ENSEMBLE_PERIOD: f64 = 4.0;
pub const ENSEMBLE_ORIGIN: f64 = -2.0;
/// Largest cutoff accepted by the dense path.
pub const DENSE_MAX_CUTOFF: usize = 512;
/// A verified estimate has a cutoff scaling slope at most this.
pub const SLOPE_THRESHOLD: f64 = 0.05;

/// Half-width of the cutoff applied after `□⁻¹`.
const INTEG_CUTOFF_RADIUS: f64 = 1.5;
/// Support of the `compact-est` members and the subinterval `I'`.
const COMPACT_SUPPORT: f64 = 1.0;
const COMPACT_SUBINTERVAL: f64 = 0.25;

type C = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimateId {
    #[serde(rename = "easy-mult")]
    EasyMult,
    #[serde(rename = "product-h1-a")]
    ProductH1A,
    #[serde(rename = "product-h1-b")]
    ProductH1B,
    #[serde(rename = "integ")]
    Integ,
    #[serde(rename = "exotic")]
    Exotic,
    #[serde(rename = "l-conv")]
    LConv,
    #[serde(rename = "compact-est")]
    CompactEst,
    #[serde(rename = "h-wh")]
    HWh,
    #[serde(rename = "hh-wwhh")]
    HhWwhh,
    #[serde(rename = "hh-hwhw")]
    HhHwhw,
}

impl EstimateId {
    pub const ALL: [EstimateId; 10] = [
        EstimateId::EasyMult,
        EstimateId::ProductH1A,
        EstimateId::ProductH1B,
        EstimateId::Integ,
        EstimateId::Exotic,
        EstimateId::LConv,
        EstimateId::CompactEst,
        EstimateId::HWh,
        EstimateId::HhWwhh,
        EstimateId::HhHwhw,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimateId::EasyMult => "easy-mult",
            EstimateId::ProductH1A => "product-h1-a",
            EstimateId::ProductH1B => "product-h1-b",
            EstimateId::Integ => "integ",
            EstimateId::Exotic => "exotic",
            EstimateId::LConv => "l-conv",
            EstimateId::CompactEst => "compact-est",
            EstimateId::HWh => "h-wh",
            EstimateId::HhWwhh => "hh-wwhh",
            EstimateId::HhHwhw => "hh-hwhw",
        }
    }
}

impl fmt::Display for EstimateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimateId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EstimateId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown estimate id `{s}`")))
    }
}

/// Regularity indices. Each estimate reads the ones it needs: `s, s_prime`
/// for `easy-mult`; `s1, s2, s1_prime, s2_prime` for `product-h1-*`;
/// `s1, s2` for `integ`; `s` for the rest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimateParams {
    pub s: f64,
    pub s_prime: f64,
    pub s1: f64,
    pub s2: f64,
    pub s1_prime: f64,
    pub s2_prime: f64,
}

impl Default for EstimateParams {
    fn default() -> Self {
        Self { s: 0.8, s_prime: 0.3, s1: 0.8, s2: 0.8, s1_prime: -0.2, s2_prime: -0.2 }
    }
}

impl EstimateParams {
    pub fn default_for(id: EstimateId) -> Self {
        match id {
            EstimateId::Integ => Self { s1: 0.9, s2: 0.9, ..Self::default() },
            _ => Self::default(),
        }
    }

    /// Whether the indices satisfy the hypotheses of the estimate.
    pub fn in_region(&self, id: EstimateId) -> bool {
        let p = self;
        match id {
            EstimateId::EasyMult => p.s > 0.5 && p.s >= p.s_prime && p.s_prime >= -p.s,
            EstimateId::ProductH1A | EstimateId::ProductH1B => {
                p.s1 > 0.5
                    && p.s2 > 0.5
                    && p.s1 >= p.s1_prime
                    && p.s1_prime >= -p.s1
                    && p.s2 >= p.s2_prime
                    && p.s2_prime >= -p.s2
            }
            EstimateId::Integ => {
                p.s1 >= 0.5 && p.s2 >= 0.5 && p.s1 + p.s2 > 1.5 && (p.s1 - p.s2).abs() <= 1.0
            }
            _ => p.s > 0.5 && p.s < 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleFamily {
    /// Gaussian coefficients, concentrated modes and modulated bumps.
    Mixed,
    /// Fields concentrated on a frequency anti-diagonal `μ + ν = k₀`, for
    /// `integ` only (dense path).
    Diagonal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSpec {
    pub size: usize,
    pub cutoffs: Vec<usize>,
    pub seed: u64,
    /// Decay exponents `α` of the Gaussian-coefficient weights `⟨ξ⟩^{-α}`.
    pub smoothness: Vec<f64>,
    pub max_rank: usize,
    pub family: EnsembleFamily,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        Self {
            size: 1000,
            cutoffs: (6..=12).map(|p| 1usize << p).collect(),
            seed: 0,
            smoothness: vec![0.0, 0.5, 1.0, 1.5, 2.0],
            max_rank: 2,
            family: EnsembleFamily::Mixed,
        }
    }
}

/// Member kind that produced a ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemberKind {
    Gaussian,
    Modes,
    Bump,
    Diagonal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffRow {
    pub n: usize,
    pub max_ratio: f64,
    pub q50: f64,
    pub q95: f64,
    pub argmax_kind: MemberKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimate_id: EstimateId,
    pub params: EstimateParams,
    pub in_region: bool,
    pub ensemble: EnsembleSpec,
    pub rows: Vec<CutoffRow>,
    pub max_ratio: f64,
    pub cutoff_scaling_slope: f64,
    pub slope_residual: f64,
    pub verified: bool,
}

impl EstimateReport {
    /// CSV with columns `N,max_ratio,q50,q95`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "N,max_ratio,q50,q95")?;
        for r in &self.rows {
            writeln!(w, "{},{:.10e},{:.10e},{:.10e}", r.n, r.max_ratio, r.q50, r.q95)?;
        }
        Ok(())
    }
}

/// Least-squares slope of `y` against `x` and the RMS residual.
pub fn fit_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    if x.len() < 2 {
        return (0.0, 0.0);
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
    (slope, (rss / n).sqrt())
}

/// Generator for member `index` at cutoff `n`, independent of evaluation order.
pub fn member_rng(seed: u64, n: usize, index: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(n as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index as u64);
    rng
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    let t = pos - lo as f64;
    sorted[lo] * (1.0 - t) + sorted[hi] * t
}

/// Sampling context at one cutoff.
pub(crate) struct Band {
    pub n: usize,
    pub m: usize,
    pub dx: f64,
    pub xi: Vec<f64>,
    pub x: Vec<f64>,
    windows: Arc<Vec<Vec<f64>>>,
}

impl Band {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return invalid("cutoff must be at least 2");
        }
        let m = 4 * n;
        let dx = ENSEMBLE_PERIOD / m as f64;
        Ok(Self {
            n,
            m,
            dx,
            xi: (0..m).map(|k| angular(k, m, ENSEMBLE_PERIOD)).collect(),
            x: (0..m).map(|j| ENSEMBLE_ORIGIN + j as f64 * dx).collect(),
            windows: window_partition(m, ENSEMBLE_PERIOD, ENSEMBLE_ORIGIN)?,
        })
    }

    fn index(&self, k: usize) -> i64 {
        super::spectral::signed_index(k, self.m)
    }

    fn slot(&self, idx: i64) -> usize {
        idx.rem_euclid(self.m as i64) as usize
    }

    fn sobolev(&self, s: f64) -> Vec<f64> {
        self.xi.iter().map(|&a| bracket(a).powf(s)).collect()
    }

    fn dtilde(&self, s: f64) -> Result<Arc<Vec<f64>>> {
        tilde_d_multiplier(self.m, ENSEMBLE_PERIOD, s)
    }

    fn project(&self, c: &mut [C], mean_zero: bool) {
        for (k, v) in c.iter_mut().enumerate() {
            let idx = self.index(k).unsigned_abs() as usize;
            if idx >= self.n || (mean_zero && idx == 0) {
                *v = C::new(0.0, 0.0);
            }
        }
    }
}

fn forward(s: &[C]) -> Vec<C> {
    let mut c = s.to_vec();
    fft_forward(&mut c);
    c
}

fn inverse(c: &[C]) -> Vec<C> {
    let mut s = c.to_vec();
    fft_inverse(&mut s);
    s
}

fn mul(a: &[C], b: &[C]) -> Vec<C> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

fn mul_real(a: &[C], w: &[f64]) -> Vec<C> {
    a.iter().zip(w).map(|(x, y)| x * y).collect()
}

fn weighted_norm(c: &[C], w: &[f64]) -> f64 {
    (c.iter().zip(w).map(|(a, b)| a.norm_sqr() * b * b).sum::<f64>() * ENSEMBLE_PERIOD).sqrt()
}

fn gram(cs: &[Vec<C>], w: &[f64]) -> Vec<C> {
    let r = cs.len();
    let mut g = vec![C::new(0.0, 0.0); r * r];
    for a in 0..r {
        for b in a..r {
            let mut acc = C::new(0.0, 0.0);
            for ((x, y), wt) in cs[a].iter().zip(&cs[b]).zip(w) {
                acc += x * y.conj() * (wt * wt);
            }
            acc *= ENSEMBLE_PERIOD;
            g[a * r + b] = acc;
            g[b * r + a] = acc.conj();
        }
    }
    g
}

fn pair_norm_sq(gu: &[C], gv: &[C]) -> f64 {
    gu.iter().zip(gv).map(|(a, b)| (a * b).re).sum::<f64>().max(0.0)
}

/// Low-rank field `Σ_r u_r ⊗ v_r` stored as samples of the factors.
#[derive(Debug, Clone)]
pub(crate) struct LowRank {
    pub u: Vec<Vec<C>>,
    pub v: Vec<Vec<C>>,
}

impl LowRank {
    fn coeffs(&self) -> (Vec<Vec<C>>, Vec<Vec<C>>) {
        (self.u.iter().map(|a| forward(a)).collect(), self.v.iter().map(|a| forward(a)).collect())
    }

    fn norm(&self, wu: &[f64], wv: &[f64]) -> f64 {
        let (cu, cv) = self.coeffs();
        pair_norm_sq(&gram(&cu, wu), &gram(&cv, wv)).sqrt()
    }

    fn product(&self, other: &LowRank) -> LowRank {
        let mut out = LowRank { u: Vec::new(), v: Vec::new() };
        for (a, b) in self.u.iter().zip(&self.v) {
            for (c, d) in other.u.iter().zip(&other.v) {
                out.u.push(mul(a, c));
                out.v.push(mul(b, d));
            }
        }
        out
    }

    /// Windowed Gram matrices `G_I` of the `u` (or `v`) factors.
    fn window_grams(&self, band: &Band, w: &[f64], along_u: bool) -> Vec<Vec<C>> {
        let f = if along_u { &self.u } else { &self.v };
        band.windows
            .iter()
            .map(|win| {
                let cs: Vec<Vec<C>> = f.iter().map(|a| forward(&mul_real(a, win))).collect();
                gram(&cs, w)
            })
            .collect()
    }
}

/// `‖φ‖_{H^{s̃}_u L_v}` (or the `v` version with `along_u = false`).
fn h_l_norm(phi: &LowRank, band: &Band, s_tilde: f64, s: f64, along_u: bool) -> f64 {
    let outer = phi.window_grams(band, &band.sobolev(s_tilde), along_u);
    let inner = phi.window_grams(band, &band.sobolev(s), !along_u);
    outer
        .iter()
        .map(|g| inner.iter().map(|h| pair_norm_sq(g, h)).fold(0.0, f64::max))
        .sum::<f64>()
        .sqrt()
}

fn ll_norm(phi: &LowRank, band: &Band, s: f64) -> Result<f64> {
    let m = band.dtilde(s)?;
    let gu = phi.window_grams(band, &m, true);
    let gv = phi.window_grams(band, &m, false);
    let mut best: f64 = 0.0;
    for a in &gu {
        for b in &gv {
            best = best.max(pair_norm_sq(a, b));
        }
    }
    Ok(best.sqrt())
}

fn l_norm_1d(f: &[C], band: &Band, s: f64) -> Result<f64> {
    let m = band.dtilde(s)?;
    Ok(band.windows.iter().map(|w| weighted_norm(&forward(&mul_real(f, w)), &m)).fold(0.0, f64::max))
}

fn derivative(c: &[C], band: &Band) -> Vec<C> {
    c.iter().zip(&band.xi).map(|(a, &k)| a * C::new(0.0, k)).collect()
}

/// Spectral primitive of a mean-zero periodic function given by coefficients.
fn primitive(c: &[C], band: &Band) -> Vec<C> {
    let pc: Vec<C> =
        c.iter().zip(&band.xi).map(|(a, &k)| if k == 0.0 { C::new(0.0, 0.0) } else { a / C::new(0.0, k) }).collect();
    inverse(&pc)
}

fn sup(f: &[C]) -> f64 {
    f.iter().map(|a| a.norm()).fold(0.0, f64::max)
}

fn draw_factor(band: &Band, spec: &EnsembleSpec, kind: MemberKind, mean_zero: bool, rng: &mut ChaCha8Rng) -> Vec<C> {
    let n = band.n;
    let mut c = vec![C::new(0.0, 0.0); band.m];
    let log_uniform = |rng: &mut ChaCha8Rng, hi: f64| (rng.gen::<f64>() * hi.ln()).exp();
    let signed_mode = |rng: &mut ChaCha8Rng| {
        let k = log_uniform(rng, (n - 1) as f64).round() as i64;
        if rng.gen::<bool>() {
            k
        } else {
            -k
        }
    };
    match kind {
        MemberKind::Gaussian => {
            let alpha = if spec.smoothness.is_empty() {
                0.0
            } else {
                spec.smoothness[rng.gen_range(0..spec.smoothness.len())]
            };
            for (k, v) in c.iter_mut().enumerate() {
                let (a, b) = gaussian_pair(rng);
                *v = C::new(a, b) * bracket(band.xi[k]).powf(-alpha);
            }
        }
        MemberKind::Modes => {
            let count = rng.gen_range(1..=2);
            for _ in 0..count {
                let k = signed_mode(rng);
                let phase = 2.0 * PI * rng.gen::<f64>();
                c[band.slot(k)] += C::from_polar(1.0, phase);
            }
        }
        MemberKind::Bump | MemberKind::Diagonal => {
            let w_min = (16.0 * band.dx).min(1.0);
            let width = w_min * (rng.gen::<f64>() * (1.0 / w_min).ln()).exp();
            let centre = ENSEMBLE_ORIGIN + ENSEMBLE_PERIOD * rng.gen::<f64>();
            let k = signed_mode(rng);
            let omega = 2.0 * PI * k as f64 / ENSEMBLE_PERIOD;
            let samples: Vec<C> = band
                .x
                .iter()
                .map(|&x| {
                    let d = x - centre;
                    let d = d - ENSEMBLE_PERIOD * (d / ENSEMBLE_PERIOD).round();
                    C::from_polar(standard_bump(d / width), omega * x)
                })
                .collect();
            c = forward(&samples);
        }
    }
    band.project(&mut c, mean_zero);
    let norm = weighted_norm(&c, &vec![1.0; band.m]);
    if norm > 0.0 {
        c.iter_mut().for_each(|a| *a /= norm);
    } else {
        c[band.slot(1)] = C::new(1.0, 0.0);
    }
    inverse(&c)
}

fn gaussian_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.gen();
    let r = (-2.0 * u1.ln()).sqrt();
    (r * (2.0 * PI * u2).cos(), r * (2.0 * PI * u2).sin())
}

fn random_kind(rng: &mut ChaCha8Rng) -> MemberKind {
    match rng.gen_range(0..3) {
        0 => MemberKind::Gaussian,
        1 => MemberKind::Modes,
        _ => MemberKind::Bump,
    }
}

fn draw_low_rank(band: &Band, spec: &EnsembleSpec, kind: MemberKind, mean_zero: bool, rng: &mut ChaCha8Rng) -> LowRank {
    let rank = rng.gen_range(1..=spec.max_rank.max(1));
    let mut lr = LowRank { u: Vec::new(), v: Vec::new() };
    for r in 0..rank {
        let ku = if r == 0 { kind } else { random_kind(rng) };
        let kv = random_kind(rng);
        lr.u.push(draw_factor(band, spec, ku, mean_zero, rng));
        lr.v.push(draw_factor(band, spec, kv, mean_zero, rng));
    }
    lr
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if rhs > 0.0 {
        lhs / rhs
    } else {
        0.0
    }
}

/// `η ⊗ η · □⁻¹ φ` for a low-rank `φ` with mean-zero factors, where `□⁻¹`
/// solves `w_uv = φ` with `w = w_u = w_v = 0` on `u = v`:
/// `w = A(u)B(v) - C(u) + C(v) - (AB)(v)`, `A' = a`, `B' = b`, `C' = aB`.
pub(crate) fn integ_low_rank(phi: &LowRank, band: &Band) -> LowRank {
    let cut: Vec<f64> = band.x.iter().map(|&x| standard_bump(x / INTEG_CUTOFF_RADIUS)).collect();
    let cut_c: Vec<C> = cut.iter().map(|&a| C::new(a, 0.0)).collect();
    let mut out = LowRank { u: Vec::new(), v: Vec::new() };
    for (a, b) in phi.u.iter().zip(&phi.v) {
        let big_a = primitive(&forward(a), band);
        let big_b = primitive(&forward(b), band);
        let ab = mul(a, &big_b);
        let cab = forward(&ab);
        let slope = cab[0];
        let per = primitive(&cab, band);
        let big_c: Vec<C> = per.iter().zip(&band.x).map(|(p, &x)| p + slope * x).collect();
        out.u.push(mul_real(&big_a, &cut));
        out.v.push(mul_real(&big_b, &cut));
        out.u.push(mul_real(&big_c, &cut).into_iter().map(|z| -z).collect());
        out.v.push(cut_c.clone());
        let tail: Vec<C> = big_c.iter().zip(big_a.iter().zip(&big_b)).map(|(c, (x, y))| c - x * y).collect();
        out.u.push(cut_c.clone());
        out.v.push(mul_real(&tail, &cut));
    }
    out
}

/// Dense version of [`integ_low_rank`] from the `M × M` coefficients of `φ`
/// (rows `μ`, columns `ν`); modes with `μ = 0` or `ν = 0` are ignored.
/// Returns the coefficients of the cut-off solution.
pub(crate) fn integ_dense(coeffs: &[C], band: &Band) -> Vec<C> {
    let m = band.m;
    let zero = C::new(0.0, 0.0);
    let mut term = vec![zero; m * m];
    let mut c_sum = vec![zero; m];
    let mut ab_sum = vec![zero; m];
    for k in 1..m {
        let mu = band.xi[k];
        if mu == 0.0 {
            continue;
        }
        let row = &coeffs[k * m..(k + 1) * m];
        let bc: Vec<C> = row
            .iter()
            .zip(&band.xi)
            .map(|(c, &nu)| if nu == 0.0 { zero } else { c / C::new(0.0, nu) })
            .collect();
        let big_b = inverse(&bc);
        let scale = C::new(0.0, mu).inv();
        for j in 0..m {
            term[k * m + j] = big_b[j] * scale;
        }
        for (l, &b) in bc.iter().enumerate() {
            if b == zero {
                continue;
            }
            let q = band.slot(band.index(k) + band.index(l));
            c_sum[q] += b;
            ab_sum[q] += b * scale;
        }
    }
    // term[k][j] holds B_k(v_j)/(iμ_k); transform along k to get Σ_k A_k(u_i) B_k(v_j)
    let mut col = vec![zero; m];
    for j in 0..m {
        for k in 0..m {
            col[k] = term[k * m + j];
        }
        fft_inverse(&mut col);
        for i in 0..m {
            term[i * m + j] = col[i];
        }
    }
    let slope = c_sum[0];
    let per = primitive(&c_sum, band);
    let big_c: Vec<C> = per.iter().zip(&band.x).map(|(p, &x)| p + slope * x).collect();
    let ab = inverse(&ab_sum);
    let cut: Vec<f64> = band.x.iter().map(|&x| standard_bump(x / INTEG_CUTOFF_RADIUS)).collect();
    for i in 0..m {
        for j in 0..m {
            let w = term[i * m + j] - big_c[i] + big_c[j] - ab[j];
            term[i * m + j] = w * (cut[i] * cut[j]);
        }
    }
    fft2(&mut term, (m, m), true);
    term
}

fn dense_norm(coeffs: &[C], band: &Band, s1: f64, s2: f64) -> f64 {
    let m = band.m;
    let (w1, w2) = (band.sobolev(s1), band.sobolev(s2));
    let mut acc = 0.0;
    for k in 0..m {
        for l in 0..m {
            acc += coeffs[k * m + l].norm_sqr() * (w1[k] * w2[l]).powi(2);
        }
    }
    (acc * ENSEMBLE_PERIOD * ENSEMBLE_PERIOD).sqrt()
}

/// Anti-diagonal member `Σ_ν d_ν e^{i(k₀-ν)u} e^{iνv}` with
/// `d_ν ∝ ⟨ν⟩^{3-2(s₁+s₂)}`, which concentrates `□⁻¹φ` on `u`- and
/// `v`-only terms of size `(Σ ⟨ν⟩^{2-2(s₁+s₂)})^{1/2}`.
fn draw_diagonal(band: &Band, params: &EstimateParams, rng: &mut ChaCha8Rng) -> Vec<C> {
    let m = band.m;
    let mut c = vec![C::new(0.0, 0.0); m * m];
    let k0: i64 = rng.gen_range(1..=3);
    let p = 3.0 - 2.0 * (params.s1 + params.s2);
    for nu in 1..band.n as i64 {
        let mu = k0 - nu;
        if mu == 0 || mu.unsigned_abs() as usize >= band.n {
            continue;
        }
        let xi = 2.0 * PI * nu as f64 / ENSEMBLE_PERIOD;
        let jitter = 0.5 + rng.gen::<f64>();
        c[band.slot(mu) * m + band.slot(nu)] = C::new(jitter * bracket(xi).powf(p), 0.0);
    }
    c
}

fn member_ratio(
    id: EstimateId,
    p: &EstimateParams,
    band: &Band,
    spec: &EnsembleSpec,
    index: usize,
) -> Result<(f64, MemberKind)> {
    let mut rng = member_rng(spec.seed, band.n, index);
    if spec.family == EnsembleFamily::Diagonal {
        let c = draw_diagonal(band, p, &mut rng);
        let lhs = dense_norm(&integ_dense(&c, band), band, p.s1, p.s2);
        let rhs = dense_norm(&c, band, p.s1 - 1.0, p.s2 - 1.0);
        return Ok((ratio(lhs, rhs), MemberKind::Diagonal));
    }
    let kinds = [MemberKind::Gaussian, MemberKind::Modes, MemberKind::Bump];
    let kind = kinds[index % 3];
    let other = random_kind(&mut rng);
    let r = match id {
        EstimateId::EasyMult => {
            let phi = draw_factor(band, spec, other, false, &mut rng);
            let psi = draw_factor(band, spec, kind, false, &mut rng);
            let lhs = weighted_norm(&forward(&mul(&phi, &psi)), &band.sobolev(p.s_prime));
            let rhs = weighted_norm(&forward(&phi), &band.sobolev(p.s))
                * weighted_norm(&forward(&psi), &band.sobolev(p.s_prime));
            ratio(lhs, rhs)
        }
        EstimateId::ProductH1A | EstimateId::ProductH1B => {
            let phi = draw_low_rank(band, spec, other, false, &mut rng);
            let psi = draw_low_rank(band, spec, kind, false, &mut rng);
            let lhs = phi.product(&psi).norm(&band.sobolev(p.s1_prime), &band.sobolev(p.s2_prime));
            let rhs = if id == EstimateId::ProductH1A {
                phi.norm(&band.sobolev(p.s1), &band.sobolev(p.s2))
                    * psi.norm(&band.sobolev(p.s1_prime), &band.sobolev(p.s2_prime))
            } else {
                phi.norm(&band.sobolev(p.s1_prime), &band.sobolev(p.s2))
                    * psi.norm(&band.sobolev(p.s1), &band.sobolev(p.s2_prime))
            };
            ratio(lhs, rhs)
        }
        EstimateId::Integ => {
            let phi = draw_low_rank(band, spec, kind, true, &mut rng);
            let lhs = integ_low_rank(&phi, band).norm(&band.sobolev(p.s1), &band.sobolev(p.s2));
            let rhs = phi.norm(&band.sobolev(p.s1 - 1.0), &band.sobolev(p.s2 - 1.0));
            ratio(lhs, rhs)
        }
        EstimateId::Exotic => {
            let phi = draw_low_rank(band, spec, other, false, &mut rng);
            let psi = draw_low_rank(band, spec, kind, false, &mut rng);
            let lhs = exotic_commutator(&phi, &psi, band, p.s)?.norm(&vec![1.0; band.m], &band.sobolev(p.s - 1.0));
            let phi_u = LowRank {
                u: phi.u.iter().map(|a| inverse(&derivative(&forward(a), band))).collect(),
                v: phi.v.clone(),
            };
            let rhs = phi_u.norm(&band.sobolev(p.s - 1.0), &band.sobolev(p.s - 1.0))
                * h_l_norm(&psi, band, p.s - 1.0, p.s, true);
            ratio(lhs, rhs)
        }
        EstimateId::LConv => {
            let f = draw_factor(band, spec, kind, false, &mut rng);
            let lhs = l_norm_1d(&f, band, p.s)?;
            let rhs = sup(&f) + weighted_norm(&derivative(&forward(&f), band), &band.sobolev(p.s - 1.0));
            ratio(lhs, rhs)
        }
        EstimateId::CompactEst => {
            let g = draw_factor(band, spec, kind, false, &mut rng);
            let f: Vec<C> =
                g.iter().zip(&band.x).map(|(a, &x)| a * standard_bump(x / COMPACT_SUPPORT)).collect();
            let inner = f
                .iter()
                .zip(&band.x)
                .filter(|(_, &x)| x.abs() <= COMPACT_SUBINTERVAL)
                .map(|(a, _)| a.norm())
                .fold(0.0, f64::max);
            let rhs = inner
                + (2.0 * COMPACT_SUPPORT).sqrt()
                    * weighted_norm(&derivative(&forward(&f), band), &band.sobolev(p.s - 1.0));
            ratio(sup(&f), rhs)
        }
        EstimateId::HWh => {
            let f = draw_factor(band, spec, other, false, &mut rng);
            let g = draw_factor(band, spec, kind, false, &mut rng);
            let w = band.sobolev(p.s - 1.0);
            let lhs = weighted_norm(&forward(&mul(&f, &g)), &w);
            ratio(lhs, l_norm_1d(&f, band, p.s)? * weighted_norm(&forward(&g), &w))
        }
        EstimateId::HhWwhh | EstimateId::HhHwhw => {
            let phi = draw_low_rank(band, spec, other, false, &mut rng);
            let psi = draw_low_rank(band, spec, kind, false, &mut rng);
            let w = band.sobolev(p.s - 1.0);
            let lhs = phi.product(&psi).norm(&w, &w);
            let rhs = if id == EstimateId::HhWwhh {
                ll_norm(&phi, band, p.s)? * psi.norm(&w, &w)
            } else {
                h_l_norm(&phi, band, p.s - 1.0, p.s, true) * h_l_norm(&psi, band, p.s - 1.0, p.s, false)
            };
            ratio(lhs, rhs)
        }
    };
    Ok((r, kind))
}

/// `D̃_u^{s-1}(φψ) - φ D̃_u^{s-1} ψ` in low-rank form.
pub(crate) fn exotic_commutator(phi: &LowRank, psi: &LowRank, band: &Band, s: f64) -> Result<LowRank> {
    let m = band.dtilde(s - 1.0)?;
    let dpsi: Vec<Vec<C>> = psi.u.iter().map(|c| inverse(&mul_real(&forward(c), &m))).collect();
    let mut out = LowRank { u: Vec::new(), v: Vec::new() };
    for (a, b) in phi.u.iter().zip(&phi.v) {
        for ((c, d), dc) in psi.u.iter().zip(&psi.v).zip(&dpsi) {
            let prod = inverse(&mul_real(&forward(&mul(a, c)), &m));
            out.u.push(prod.iter().zip(mul(a, dc)).map(|(x, y)| x - y).collect());
            out.v.push(mul(b, d));
        }
    }
    Ok(out)
}

/// Measures `‖LHS‖ / ‖RHS‖` over the ensemble at every cutoff.
pub fn verify_estimate(id: EstimateId, params: &EstimateParams, spec: &EnsembleSpec) -> Result<EstimateReport> {
    if spec.size == 0 || spec.cutoffs.is_empty() {
        return invalid("ensemble needs at least one member and one cutoff");
    }
    if spec.family == EnsembleFamily::Diagonal {
        if id != EstimateId::Integ {
            return invalid("the diagonal family applies to integ only");
        }
        if spec.cutoffs.iter().any(|&n| n > DENSE_MAX_CUTOFF) {
            return invalid(format!("the diagonal family needs cutoffs at most {DENSE_MAX_CUTOFF}"));
        }
    }
    let mut rows = Vec::with_capacity(spec.cutoffs.len());
    for &n in &spec.cutoffs {
        let band = Band::new(n)?;
        let results: Vec<(f64, MemberKind)> = (0..spec.size)
            .into_par_iter()
            .map(|i| member_ratio(id, params, &band, spec, i))
            .collect::<Result<_>>()?;
        let (mut best, mut kind) = (0.0, results[0].1);
        for &(r, k) in &results {
            if r > best {
                best = r;
                kind = k;
            }
        }
        let mut sorted: Vec<f64> = results.iter().map(|r| r.0).collect();
        sorted.sort_by(f64::total_cmp);
        rows.push(CutoffRow {
            n,
            max_ratio: best,
            q50: quantile(&sorted, 0.5),
            q95: quantile(&sorted, 0.95),
            argmax_kind: kind,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.max_ratio.max(f64::MIN_POSITIVE).ln()).collect();
    let (slope, residual) = fit_slope(&xs, &ys);
    let max_ratio = rows.iter().map(|r| r.max_ratio).fold(0.0, f64::max);
    Ok(EstimateReport {
        estimate_id: id,
        params: *params,
        in_region: params.in_region(id),
        ensemble: spec.clone(),
        rows,
        max_ratio,
        cutoff_scaling_slope: slope,
        slope_residual: residual,
        verified: slope <= SLOPE_THRESHOLD,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mode(band: &Band, k: i64) -> Vec<C> {
        let om = 2.0 * PI * k as f64 / ENSEMBLE_PERIOD;
        band.x.iter().map(|&x| C::from_polar(1.0, om * x)).collect()
    }

    #[test]
    fn integ_low_rank_matches_dense() {
        let band = Band::new(8).unwrap();
        let phi = LowRank {
            u: vec![mode(&band, 2), mode(&band, -3)],
            v: vec![mode(&band, 1), mode(&band, 5)],
        };
        let lr = integ_low_rank(&phi, &band);
        let m = band.m;
        let mut dense = vec![C::new(0.0, 0.0); m * m];
        for (a, b) in phi.u.iter().zip(&phi.v) {
            let (ca, cb) = (forward(a), forward(b));
            for k in 0..m {
                for l in 0..m {
                    dense[k * m + l] += ca[k] * cb[l];
                }
            }
        }
        let d = dense_norm(&integ_dense(&dense, &band), &band, 0.7, 0.9);
        let l = lr.norm(&band.sobolev(0.7), &band.sobolev(0.9));
        assert!((d - l).abs() < 1e-10 * l, "{d} vs {l}");
    }

    #[test]
    fn integ_vanishes_on_initial_line() {
        let band = Band::new(8).unwrap();
        let phi = LowRank { u: vec![mode(&band, 2)], v: vec![mode(&band, -1)] };
        let w = integ_low_rank(&phi, &band);
        let j0 = band.x.iter().position(|&x| x == 0.0).unwrap();
        let mut val = C::new(0.0, 0.0);
        for (a, b) in w.u.iter().zip(&w.v) {
            val += a[j0] * b[j0];
        }
        assert!(val.norm() < 1e-12);
    }

    #[test]
    fn exotic_vanishes_for_constant_phi() {
        let band = Band::new(16).unwrap();
        let one = vec![C::new(1.3, 0.0); band.m];
        let phi = LowRank { u: vec![one.clone()], v: vec![one] };
        let psi = LowRank { u: vec![mode(&band, 5)], v: vec![mode(&band, -2)] };
        let c = exotic_commutator(&phi, &psi, &band, 0.8).unwrap();
        let n = c.norm(&vec![1.0; band.m], &band.sobolev(-0.2));
        assert!(n < 1e-12, "{n}");
    }

    #[test]
    fn parse_ids() {
        for id in EstimateId::ALL {
            assert_eq!(id.name().parse::<EstimateId>().unwrap(), id);
        }
        assert!("bogus".parse::<EstimateId>().is_err());
    }
}
