//! The critical-space counterexample in one space dimension.
//!
//! Frequencies are the integers `|ξ| ≤ N` with `dξ = 1`. With
//! `Ĝ(ξ) = log^{-p}⟨ξ⟩` for `|ξ| ≥ 2` (zero below), `ĝ = sin|ξ| Ĝ` and
//! `q̂ = (sin|ξ|/|ξ|) ĝ`, the square `Q = q²` has `Q̂ = q̂ * q̂ / 2π`, and
//! `‖Q‖²_{H^{1/2}} = Σ ⟨ξ⟩ |Q̂(ξ)|²`.

use num_complex::Complex64;
use serde::Serialize;

use super::profile::log_bracket;
use crate::error::{invalid, Result};
use crate::norms::{bracket, fft_forward, fft_inverse};
use crate::quadrature::integrate;

/// `ε` of the default experiment.
pub const DEFAULT_EPSILON: f64 = 0.01;

/// Lowest frequency kept in `Ĝ`.
pub const LOW_CUT: i64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthRow {
    pub cutoff: usize,
    /// `‖Q‖²_{H^{1/2}}`.
    pub q_norm_sq: f64,
    /// `‖G‖²_{H^{-1/2}}` truncated at the cutoff.
    pub g_norm_sq: f64,
    /// Truncated `‖G‖²_{H^{-1/2}}` plus the integral tail beyond the cutoff.
    pub g_norm_sq_limit: f64,
    /// `∫_2^N dρ / (ρ log^e ρ)` with the exponent of the asymptotic integrand.
    pub proof_integral: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthTable {
    /// Power `p` of the logarithm in `Ĝ`.
    pub log_power: f64,
    /// Exponent `e` in `∫ dρ / (ρ log^e ρ)`.
    pub integrand_exponent: f64,
    pub rows: Vec<GrowthRow>,
}

impl GrowthTable {
    pub fn is_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].q_norm_sq > w[0].q_norm_sq)
    }

    /// `last / first - 1` of `‖Q‖²`.
    pub fn relative_growth(&self) -> f64 {
        match (self.rows.first(), self.rows.last()) {
            (Some(a), Some(b)) => b.q_norm_sq / a.q_norm_sq - 1.0,
            _ => 0.0,
        }
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "cutoff,q_norm_sq,g_norm_sq,g_norm_sq_limit,proof_integral")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{:e},{:e},{:e},{:e}",
                r.cutoff, r.q_norm_sq, r.g_norm_sq, r.g_norm_sq_limit, r.proof_integral
            )?;
        }
        Ok(())
    }
}

/// Exponent of the integrand `⟨ρ⟩|Q̂(ρ)|² ~ 1/(ρ log^e ρ)`: the inner
/// integral of `q̂` grows like `log^{1-p}` when `p < 1` and converges when
/// `p > 1`.
pub fn integrand_exponent(log_power: f64) -> f64 {
    if log_power < 1.0 {
        4.0 * log_power - 2.0
    } else {
        2.0 * log_power
    }
}

/// `∫_2^N dρ / (ρ log^e ρ)` by quadrature in `s = log ρ`.
pub fn proof_integral(exponent: f64, cutoff: f64) -> f64 {
    integrate(|s: f64| s.powf(-exponent), 2f64.ln(), cutoff.ln(), 1e-13)
}

/// `ĝ(ξ)` of the counterexample (zero for `|ξ| < 2`).
pub fn g_hat(xi: f64, log_power: f64) -> f64 {
    if xi.abs() < LOW_CUT as f64 {
        0.0
    } else {
        log_bracket(xi).powf(-log_power)
    }
}

/// `sin(|ξ|)/|ξ|` with value 1 at 0.
pub fn sinc(xi: f64) -> f64 {
    if xi == 0.0 {
        1.0
    } else {
        xi.sin() / xi
    }
}

/// `‖Q‖²_{H^{1/2}}` and `‖G‖²_{H^{-1/2}}` at one cutoff.
pub fn counterexample_norms(log_power: f64, cutoff: usize, step: f64) -> Result<(f64, f64)> {
    if cutoff < 4 || !(log_power > 0.0) || !(step > 0.0 && step <= 1.0) {
        return invalid("counterexample needs cutoff ≥ 4, a positive log power and a step in (0, 1]");
    }
    let n = (cutoff as f64 / step).round() as i64;
    let len = (4 * n as usize + 1).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    let mut g_sq = 0.0;
    for k in -n..=n {
        let xi = k as f64 * step;
        let gh = g_hat(xi, log_power);
        g_sq += gh * gh / bracket(xi) * step;
        let q = sinc(xi) * xi.abs().sin() * gh;
        buf[k.rem_euclid(len as i64) as usize] = Complex64::new(q, 0.0);
    }
    fft_forward(&mut buf);
    buf.iter_mut().for_each(|c| *c = *c * *c);
    fft_inverse(&mut buf);
    let scale = len as f64 * step / (2.0 * std::f64::consts::PI);
    let mut q_sq = 0.0;
    for k in -2 * n..=2 * n {
        let c = buf[k.rem_euclid(len as i64) as usize].re * scale;
        q_sq += bracket(k as f64 * step) * c * c * step;
    }
    Ok((q_sq, g_sq))
}

/// Growth table of `‖Q‖²_{H^{1/2}}` for `Ĝ = log^{-(1/2+ε)}⟨ξ⟩`, or for
/// `log^{-(1+ε)}` when `control` is set.
pub fn critical_counterexample(epsilon: f64, cutoffs: &[usize], control: bool) -> Result<GrowthTable> {
    if !(epsilon > 0.0 && epsilon <= 0.1) {
        return invalid("ε must lie in (0, 0.1]");
    }
    if cutoffs.iter().any(|n| !n.is_power_of_two()) {
        return invalid("cutoffs must be powers of two");
    }
    let p = if control { 1.0 + epsilon } else { 0.5 + epsilon };
    let e = integrand_exponent(p);
    let rows = cutoffs
        .iter()
        .map(|&n| {
            let (q, g) = counterexample_norms(p, n, 1.0)?;
            let s = (n as f64).ln();
            let tail = 2.0 * s.powf(1.0 - 2.0 * p) / (2.0 * p - 1.0);
            Ok(GrowthRow {
                cutoff: n,
                q_norm_sq: q,
                g_norm_sq: g,
                g_norm_sq_limit: g + tail,
                proof_integral: proof_integral(e, n as f64),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GrowthTable { log_power: p, integrand_exponent: e, rows })
}

/// `N = 2^lo, …, 2^hi`.
pub fn power_sweep(lo: u32, hi: u32) -> Vec<usize> {
    (lo..=hi).map(|k| 1usize << k).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct_q_sq(p: f64, n: i64) -> f64 {
        let q = |k: i64| {
            let xi = k as f64;
            sinc(xi) * xi.abs().sin() * g_hat(xi, p)
        };
        let mut acc = 0.0;
        for k in -2 * n..=2 * n {
            let mut c = 0.0;
            for m in (k - n).max(-n)..=(k + n).min(n) {
                c += q(m) * q(k - m);
            }
            c /= 2.0 * std::f64::consts::PI;
            acc += bracket(k as f64) * c * c;
        }
        acc
    }

    #[test]
    fn fft_convolution_matches_direct_sum() {
        for &n in &[8usize, 64] {
            let (q, _) = counterexample_norms(0.51, n, 1.0).unwrap();
            let d = direct_q_sq(0.51, n as i64);
            assert!((q - d).abs() < 1e-12 * d, "{q} vs {d}");
        }
    }

    #[test]
    fn small_cutoffs_increase() {
        let t = critical_counterexample(DEFAULT_EPSILON, &[64, 128], false).unwrap();
        assert!(t.rows[1].q_norm_sq > t.rows[0].q_norm_sq);
    }

    #[test]
    fn proof_integral_closed_form() {
        let e = 0.04;
        let n = 1e6f64;
        let exact = (n.ln().powf(1.0 - e) - 2f64.ln().powf(1.0 - e)) / (1.0 - e);
        assert!((proof_integral(e, n) - exact).abs() < 1e-12 * exact);
    }
}
