//! Non-scattering data and the Ḣ¹ defect witness.
//!
//! For `φ = e^{iG(u)/2} e^{-iG(v)/2}` and the free states
//! `φ₊ = e^{iG(u)/2} e^{-ib/2} + e^{ia/2} e^{-iG(v)/2} - e^{ia/2} e^{-ib/2}`
//! the defect at time `T` is `‖∂(φ - φ₊)(T)‖² = 2(t₁(b) + t₂(a))` with
//!
//! `t₁(b) = ∫ G'(u)²/4 |e^{-iG(u-2T)/2} - e^{-ib/2}|² du`,
//! `t₂(a) = ∫ G'(v)²/4 |e^{iG(v+2T)/2} - e^{ia/2}|² dv`.
//!
//! Integrals use the substitution `u = sinh s` with the trapezoid rule.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::exact::s1_data;
use super::profile::ScalarProfile;
use crate::error::{invalid, Result};
use crate::nullsolver::CauchyData;

/// Floor below which the witness counts the defect as vanishing.
pub const DEFECT_FLOOR: f64 = 0.01;

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// `G(x) = sin(log⟨x⟩)`.
pub fn nonscattering_profile() -> ScalarProfile {
    ScalarProfile::log_oscillation()
}

/// `f ≡ (1, 0)`, `g = (0, G')` for the log-oscillating primitive.
pub fn nonscattering_data(x_min: f64, x_max: f64, spacing: f64) -> Result<CauchyData> {
    s1_data(&nonscattering_profile(), x_min, x_max, spacing)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WitnessOptions {
    /// Half-width of the `s` interval of the substitution `u = sinh s`.
    pub s_max: f64,
    pub points: usize,
    /// Points per axis of the coarse phase grid on `[0, 4π)`.
    pub phase_grid: usize,
    pub refinements: usize,
}

impl Default for WitnessOptions {
    fn default() -> Self {
        Self { s_max: 20.0, points: 400_001, phase_grid: 720, refinements: 8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WitnessRow {
    pub t: f64,
    /// `min over (a, b)` of the defect at this `T` alone.
    pub per_t_defect: f64,
    /// Defect of the fixed state at the floor phases.
    pub fixed_state_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonscatteringWitness {
    pub rows: Vec<WitnessRow>,
    /// `inf over (a, b)` of `max over T` of the defect.
    pub floor: f64,
    pub phases: (f64, f64),
    /// `∫ G'²/4`.
    pub weight_mass: f64,
}

impl NonscatteringWitness {
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,per_t_defect,fixed_state_defect")?;
        for r in &self.rows {
            writeln!(w, "{},{:e},{:e}", r.t, r.per_t_defect, r.fixed_state_defect)?;
        }
        Ok(())
    }

    pub fn max_per_t_defect(&self) -> f64 {
        self.rows.iter().map(|r| r.per_t_defect).fold(0.0, f64::max)
    }
}

/// `n` values log-spaced on `[lo, hi]`.
pub fn log_sweep(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    (0..n).map(|k| (lo.ln() + (hi / lo).ln() * k as f64 / (n - 1) as f64).exp()).collect()
}

struct Quadrature {
    nodes: Vec<f64>,
    /// `G'(u)²/4` times the quadrature weight.
    weights: Vec<f64>,
}

impl Quadrature {
    fn new(g: &ScalarProfile, opts: &WitnessOptions) -> Self {
        let ds = 2.0 * opts.s_max / (opts.points - 1) as f64;
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for k in 0..opts.points {
            let s = -opts.s_max + k as f64 * ds;
            let u = s.sinh();
            let w = 0.25 * g.derivative(u).powi(2) * s.cosh() * ds;
            if w > 0.0 {
                nodes.push(u);
                weights.push(w);
            }
        }
        Self { nodes, weights }
    }

    fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `(Σ w e^{iθ}, θ)` with `θ = sign · G(u + shift)/2`.
    fn moment(&self, g: &ScalarProfile, shift: f64, sign: f64) -> (Complex64, Vec<f64>) {
        let xs: Vec<f64> = self.nodes.iter().map(|u| u + shift).collect();
        let theta: Vec<f64> = g.values_at(&xs).into_iter().map(|v| 0.5 * sign * v).collect();
        let s = self.weights.iter().zip(&theta).map(|(w, t)| Complex64::from_polar(*w, *t)).sum();
        (s, theta)
    }

    /// `min over c` of `Σ w |e^{iθ} - e^{ic}|²`, evaluated as
    /// `Σ w · 4 sin²((θ - arg S)/2)` to avoid cancellation.
    fn best_match(&self, s: Complex64, theta: &[f64]) -> f64 {
        let c = s.arg();
        self.weights.iter().zip(theta).map(|(w, t)| 4.0 * w * (0.5 * (t - c)).sin().powi(2)).sum()
    }
}

struct Moments {
    t: f64,
    s1: Complex64,
    s2: Complex64,
    per_t: f64,
}

fn fixed_defect_sq(mass: f64, m: &Moments, a: f64, b: f64) -> f64 {
    // |e^{iθ} - e^{ic}|² = 2 - 2 Re(e^{iθ - ic})
    let t1 = 2.0 * mass - 2.0 * (m.s1 * Complex64::from_polar(1.0, 0.5 * b)).re;
    let t2 = 2.0 * mass - 2.0 * (m.s2 * Complex64::from_polar(1.0, -0.5 * a)).re;
    (2.0 * (t1 + t2)).max(0.0)
}

fn worst(mass: f64, ms: &[Moments], a: f64, b: f64) -> f64 {
    ms.iter().map(|m| fixed_defect_sq(mass, m, a, b)).fold(0.0, f64::max)
}

/// Ḣ¹ defect of the S¹ solution with profile `g` against the free family
/// over the times `ts`.
pub fn nonscattering_witness(g: &ScalarProfile, ts: &[f64], opts: &WitnessOptions) -> Result<NonscatteringWitness> {
    g.validate()?;
    if ts.is_empty() || opts.points < 3 || opts.phase_grid < 4 {
        return invalid("witness needs times, quadrature points and a phase grid");
    }
    let quad = Quadrature::new(g, opts);
    let mass = quad.mass();
    let ms: Vec<Moments> = ts
        .par_iter()
        .map(|&t| {
            let (s1, th1) = quad.moment(g, -2.0 * t, -1.0);
            let (s2, th2) = quad.moment(g, 2.0 * t, 1.0);
            let per_t = (2.0 * (quad.best_match(s1, &th1) + quad.best_match(s2, &th2))).max(0.0);
            Moments { t, s1, s2, per_t }
        })
        .collect();

    // the matching phases satisfy e^{-ib/2} = S1/|S1| and e^{ia/2} = S2/|S2|
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for m in &ms {
        let b = (-2.0 * m.s1.arg()).rem_euclid(FOUR_PI);
        let a = (2.0 * m.s2.arg()).rem_euclid(FOUR_PI);
        let w = worst(mass, &ms, a, b);
        if w < best.0 {
            best = (w, a, b);
        }
    }
    let n = opts.phase_grid;
    let step = FOUR_PI / n as f64;
    let coarse = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (a, b) = ((k / n) as f64 * step, (k % n) as f64 * step);
            (worst(mass, &ms, a, b), a, b)
        })
        .reduce(|| (f64::INFINITY, 0.0, 0.0), |x, y| if y.0 < x.0 { y } else { x });
    if coarse.0 < best.0 {
        best = coarse;
    }
    let mut radius = step;
    for _ in 0..opts.refinements {
        let m = 20;
        for p in 0..=2 * m {
            for q in 0..=2 * m {
                let a = best.1 + radius * (p as f64 - m as f64) / m as f64;
                let b = best.2 + radius * (q as f64 - m as f64) / m as f64;
                let w = worst(mass, &ms, a, b);
                if w < best.0 {
                    best = (w, a, b);
                }
            }
        }
        radius *= 0.2;
    }
    let (_, a, b) = best;
    let rows = ms
        .iter()
        .map(|m| WitnessRow { t: m.t, per_t_defect: m.per_t.sqrt(), fixed_state_defect: fixed_defect_sq(mass, m, a, b).sqrt() })
        .collect();
    Ok(NonscatteringWitness {
        rows,
        floor: best.0.sqrt(),
        phases: (a.rem_euclid(FOUR_PI), b.rem_euclid(FOUR_PI)),
        weight_mass: mass,
    })
}
