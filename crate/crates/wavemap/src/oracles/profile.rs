//! Real profiles of one variable with closed-form derivatives and
//! quadrature primitives.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::norms::standard_bump;
use crate::quadrature::integrate;

const PRIMITIVE_TOL: f64 = 1e-13;

/// A real function of one variable. `primitive(x) = ∫₀ˣ value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarProfile {
    Constant { value: f64 },
    /// `slope · x`.
    Linear { slope: f64 },
    /// `amplitude · exp(-((x - center) / width)²)`.
    Gaussian { amplitude: f64, width: f64, center: f64 },
    /// `amplitude · exp(1 - 1/(1 - (x/radius)²))` on `|x| < radius`.
    Bump { amplitude: f64, radius: f64 },
    /// Smooth step from `-amplitude` to `amplitude` whose derivative
    /// `amplitude · 35(1 - s²)³ / (16 radius)` is supported in `|x| ≤ radius`.
    Ramp { amplitude: f64, radius: f64 },
    /// `amplitude · sin(log⟨x⟩)`.
    LogOscillation { amplitude: f64 },
    /// Catmull-Rom cubic through equispaced samples, constant outside.
    Samples { x_min: f64, spacing: f64, values: Vec<f64> },
    /// `∫₀ˣ of`.
    Primitive { of: Box<ScalarProfile> },
}

impl ScalarProfile {
    pub fn gaussian() -> Self {
        ScalarProfile::Gaussian { amplitude: 1.0, width: 1.0, center: 0.0 }
    }

    pub fn log_oscillation() -> Self {
        ScalarProfile::LogOscillation { amplitude: 1.0 }
    }

    pub fn primitive_of(of: ScalarProfile) -> Self {
        ScalarProfile::Primitive { of: Box::new(of) }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ScalarProfile::Gaussian { width, .. } if !(*width > 0.0) => invalid("gaussian width must be positive"),
            ScalarProfile::Bump { radius, .. } | ScalarProfile::Ramp { radius, .. } if !(*radius > 0.0) => {
                invalid("profile radius must be positive")
            }
            ScalarProfile::Samples { spacing, values, .. } if !(*spacing > 0.0) || values.len() < 2 => {
                invalid("sampled profile needs positive spacing and at least two values")
            }
            ScalarProfile::Primitive { of } => of.validate(),
            _ => Ok(()),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            ScalarProfile::Constant { value } => *value,
            ScalarProfile::Linear { slope } => slope * x,
            ScalarProfile::Gaussian { amplitude, width, center } => {
                let z = (x - center) / width;
                amplitude * (-z * z).exp()
            }
            ScalarProfile::Bump { amplitude, radius } => amplitude * standard_bump(x / radius),
            ScalarProfile::Ramp { amplitude, radius } => amplitude * ramp(x / radius),
            ScalarProfile::LogOscillation { amplitude } => amplitude * log_bracket(x).sin(),
            ScalarProfile::Samples { x_min, spacing, values } => catmull_rom(*x_min, *spacing, values, x).0,
            ScalarProfile::Primitive { of } => of.primitive(x),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            ScalarProfile::Constant { .. } => 0.0,
            ScalarProfile::Linear { slope } => *slope,
            ScalarProfile::Gaussian { amplitude, width, center } => {
                let z = (x - center) / width;
                -2.0 * z / width * amplitude * (-z * z).exp()
            }
            ScalarProfile::Bump { amplitude, radius } => {
                let s = x / radius;
                if s.abs() >= 1.0 {
                    0.0
                } else {
                    let q = 1.0 - s * s;
                    -2.0 * s / (q * q) * standard_bump(s) * amplitude / radius
                }
            }
            ScalarProfile::Ramp { amplitude, radius } => {
                let s = x / radius;
                if s.abs() >= 1.0 {
                    0.0
                } else {
                    amplitude / radius * 35.0 * (1.0 - s * s).powi(3) / 16.0
                }
            }
            ScalarProfile::LogOscillation { amplitude } => {
                amplitude * log_bracket(x).cos() * x / (1.0 + x * x)
            }
            ScalarProfile::Samples { x_min, spacing, values } => catmull_rom(*x_min, *spacing, values, x).1,
            ScalarProfile::Primitive { of } => of.value(x),
        }
    }

    /// `∫₀ˣ value`.
    pub fn primitive(&self, x: f64) -> f64 {
        match self {
            ScalarProfile::Constant { value } => value * x,
            ScalarProfile::Linear { slope } => 0.5 * slope * x * x,
            _ => self.split_integral(&self.breakpoints(), 0.0, x),
        }
    }

    /// Sorted points at which quadrature of the profile is split: its own
    /// features and `±2^k`, so a long interval cannot step over a narrow bump.
    fn breakpoints(&self) -> Vec<f64> {
        let mut pts = match self {
            ScalarProfile::Gaussian { width, center, .. } => (-8..=8).map(|k| center + k as f64 * width).collect(),
            ScalarProfile::Bump { radius, .. } | ScalarProfile::Ramp { radius, .. } => vec![-radius, *radius],
            ScalarProfile::Samples { x_min, spacing, values } => {
                vec![*x_min, x_min + (values.len() - 1) as f64 * spacing]
            }
            ScalarProfile::Primitive { of } => of.breakpoints(),
            _ => Vec::new(),
        };
        pts.push(0.0);
        for k in -4..64 {
            let p = f64::powi(2.0, k);
            pts.extend([p, -p]);
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    fn split_integral(&self, pts: &[f64], a: f64, b: f64) -> f64 {
        let (lo, hi, sign) = if a <= b { (a, b, 1.0) } else { (b, a, -1.0) };
        let first = pts.partition_point(|&p| p <= lo);
        let last = pts.partition_point(|&p| p < hi).max(first);
        let mut acc = 0.0;
        let mut left = lo;
        for &p in &pts[first..last] {
            acc += integrate(|y| self.value(y), left, p, PRIMITIVE_TOL);
            left = p;
        }
        acc += integrate(|y| self.value(y), left, hi, PRIMITIVE_TOL);
        sign * acc
    }

    /// Values at many points; sorted input shares one cumulative quadrature
    /// for primitives.
    pub fn values_at(&self, xs: &[f64]) -> Vec<f64> {
        match self {
            ScalarProfile::Primitive { of } if xs.windows(2).all(|w| w[0] <= w[1]) => {
                let pts = of.breakpoints();
                let mut out = Vec::with_capacity(xs.len());
                let mut prev = match xs.first() {
                    Some(&x0) => x0,
                    None => return out,
                };
                let mut acc = of.split_integral(&pts, 0.0, prev);
                for &x in xs {
                    acc += of.split_integral(&pts, prev, x);
                    out.push(acc);
                    prev = x;
                }
                out
            }
            _ => xs.iter().map(|&x| self.value(x)).collect(),
        }
    }

    pub fn derivatives_at(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.derivative(x)).collect()
    }

    /// Radius outside which the derivative vanishes, when there is one.
    pub fn derivative_support(&self) -> Option<f64> {
        match self {
            ScalarProfile::Constant { .. } => Some(0.0),
            ScalarProfile::Ramp { radius, .. } => Some(*radius),
            ScalarProfile::Primitive { of } => match of.as_ref() {
                ScalarProfile::Bump { radius, .. } => Some(*radius),
                ScalarProfile::Constant { value } if *value == 0.0 => Some(0.0),
                _ => None,
            },
            _ => None,
        }
    }
}

/// `log⟨x⟩ = ½ log(1 + x²)`.
pub fn log_bracket(x: f64) -> f64 {
    0.5 * (x * x).ln_1p()
}

fn ramp(s: f64) -> f64 {
    if s >= 1.0 {
        1.0
    } else if s <= -1.0 {
        -1.0
    } else {
        let s2 = s * s;
        s * (35.0 + s2 * (-35.0 + s2 * (21.0 - 5.0 * s2))) / 16.0
    }
}

/// Catmull-Rom value and derivative; constant extension beyond the samples.
pub(crate) fn catmull_rom(x_min: f64, spacing: f64, values: &[f64], x: f64) -> (f64, f64) {
    let n = values.len();
    let a = (x - x_min) / spacing;
    if a <= 0.0 {
        return (values[0], 0.0);
    }
    if a >= (n - 1) as f64 {
        return (values[n - 1], 0.0);
    }
    let k = (a.floor() as usize).min(n - 2);
    let t = a - k as f64;
    let at = |m: i64| values[m.clamp(0, n as i64 - 1) as usize];
    let (p0, p1, p2, p3) = (at(k as i64 - 1), at(k as i64), at(k as i64 + 1), at(k as i64 + 2));
    let c1 = 0.5 * (p2 - p0);
    let c2 = p0 - 2.5 * p1 + 2.0 * p2 - 0.5 * p3;
    let c3 = 0.5 * (p3 - p0) + 1.5 * (p1 - p2);
    let val = p1 + t * (c1 + t * (c2 + t * c3));
    let der = (c1 + t * (2.0 * c2 + 3.0 * t * c3)) / spacing;
    (val, der)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_differences() {
        let profiles = [
            ScalarProfile::gaussian(),
            ScalarProfile::Bump { amplitude: 1.3, radius: 1.0 },
            ScalarProfile::Ramp { amplitude: 0.7, radius: 1.5 },
            ScalarProfile::log_oscillation(),
        ];
        let e = 1e-5;
        for p in &profiles {
            for &x in &[-0.9, -0.2, 0.3, 0.77, 2.5] {
                let fd = (p.value(x + e) - p.value(x - e)) / (2.0 * e);
                assert!((fd - p.derivative(x)).abs() < 1e-8, "{p:?} at {x}");
            }
        }
    }

    #[test]
    fn ramp_is_continuous_at_the_edges() {
        assert!((ramp(1.0 - 1e-12) - 1.0).abs() < 1e-10);
        assert!((ramp(-1.0 + 1e-12) + 1.0).abs() < 1e-10);
    }

    #[test]
    fn batch_primitive_matches_pointwise() {
        let p = ScalarProfile::primitive_of(ScalarProfile::gaussian());
        let xs = [-3.0, -1.0, 0.0, 0.5, 2.0];
        let batch = p.values_at(&xs);
        for (x, b) in xs.iter().zip(batch) {
            assert!((p.value(*x) - b).abs() < 1e-12);
        }
        let half_root_pi = 0.5 * std::f64::consts::PI.sqrt();
        assert!((p.value(30.0) - half_root_pi).abs() < 1e-12);
        assert!((p.value(-1e8) + half_root_pi).abs() < 1e-12);
        let far: Vec<f64> = (0..5).map(|k| -2027.0 + k as f64).collect();
        assert!(p.values_at(&far).iter().all(|v| (v + half_root_pi).abs() < 1e-12));
    }

    #[test]
    fn samples_interpolate_nodes() {
        let p = ScalarProfile::Samples { x_min: 0.0, spacing: 0.5, values: vec![0.0, 1.0, 4.0, 9.0] };
        assert_eq!(p.value(0.5), 1.0);
        assert_eq!(p.value(1.0), 4.0);
        assert_eq!(p.value(10.0), 9.0);
    }
}
