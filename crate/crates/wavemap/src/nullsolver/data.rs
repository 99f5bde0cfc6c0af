use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::TargetManifold;

/// Position and velocity sampled at uniform nodes `x_min + k spacing`.
///
/// Outside `[x_min, x_max]` the data is extended by its boundary position and
/// zero velocity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyData {
    pub x_min: f64,
    pub x_max: f64,
    pub spacing: f64,
    pub dim: usize,
    pub samples_f: Vec<f64>,
    pub samples_g: Vec<f64>,
}

/// Tolerance for the sphere compatibility conditions.
pub const SPHERE_DATA_TOL: f64 = 1e-12;

impl CauchyData {
    pub fn new(
        x_min: f64,
        spacing: f64,
        dim: usize,
        samples_f: Vec<f64>,
        samples_g: Vec<f64>,
    ) -> Result<Self> {
        if !(spacing > 0.0) || dim == 0 {
            return invalid("data needs positive spacing and dim");
        }
        if samples_f.len() != samples_g.len() || samples_f.len() % dim != 0 || samples_f.is_empty() {
            return invalid("position and velocity sample arrays do not match");
        }
        let n = samples_f.len() / dim;
        Ok(Self {
            x_min,
            x_max: x_min + (n - 1) as f64 * spacing,
            spacing,
            dim,
            samples_f,
            samples_g,
        })
    }

    /// Samples closures `f(x, out)` and `g(x, out)` on `[x_min, x_max]`.
    pub fn from_fn<F, G>(x_min: f64, x_max: f64, spacing: f64, dim: usize, f: F, g: G) -> Result<Self>
    where
        F: Fn(f64, &mut [f64]),
        G: Fn(f64, &mut [f64]),
    {
        if !(x_max > x_min) || !(spacing > 0.0) {
            return invalid("data interval must be nonempty with positive spacing");
        }
        let n = ((x_max - x_min) / spacing).round() as usize + 1;
        let mut sf = vec![0.0; n * dim];
        let mut sg = vec![0.0; n * dim];
        for k in 0..n {
            let x = x_min + k as f64 * spacing;
            f(x, &mut sf[k * dim..(k + 1) * dim]);
            g(x, &mut sg[k * dim..(k + 1) * dim]);
        }
        Self::new(x_min, spacing, dim, sf, sg)
    }

    pub fn len(&self) -> usize {
        self.samples_f.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.samples_f.is_empty()
    }

    pub fn x(&self, k: usize) -> f64 {
        self.x_min + k as f64 * self.spacing
    }

    pub fn f(&self, k: usize) -> &[f64] {
        &self.samples_f[k * self.dim..(k + 1) * self.dim]
    }

    pub fn g(&self, k: usize) -> &[f64] {
        &self.samples_g[k * self.dim..(k + 1) * self.dim]
    }

    /// Position at a possibly out-of-range index (constant extension).
    pub fn f_ext(&self, k: i64) -> &[f64] {
        let k = k.clamp(0, self.len() as i64 - 1) as usize;
        self.f(k)
    }

    /// Velocity at a possibly out-of-range index (zero extension).
    pub fn g_ext(&self, k: i64, out: &mut [f64]) {
        if k < 0 || k >= self.len() as i64 {
            out.iter_mut().for_each(|o| *o = 0.0);
        } else {
            out.copy_from_slice(self.g(k as usize));
        }
    }

    /// Checks dimension, chart domain and sphere compatibility.
    pub fn validate_for(&self, target: &TargetManifold) -> Result<()> {
        if target.chart_dim() != self.dim {
            return invalid(format!(
                "data dimension {} differs from target dimension {}",
                self.dim,
                target.chart_dim()
            ));
        }
        for k in 0..self.len() {
            let (f, g) = (self.f(k), self.g(k));
            if f.iter().chain(g).any(|a| !a.is_finite()) {
                return invalid(format!("non-finite data at node {k}"));
            }
            target.check_domain(f)?;
            if target.is_sphere() {
                let norm = f.iter().map(|a| a * a).sum::<f64>().sqrt();
                let dot: f64 = f.iter().zip(g).map(|(a, b)| a * b).sum();
                if (norm - 1.0).abs() > SPHERE_DATA_TOL || dot.abs() > SPHERE_DATA_TOL {
                    return invalid(format!(
                        "sphere data violates |f| = 1 or f.g = 0 at x = {}",
                        self.x(k)
                    ));
                }
            }
        }
        Ok(())
    }

    /// Fourth-order central difference `f'` at index `k` with constant extension.
    pub fn f_prime(&self, k: i64, out: &mut [f64]) {
        let (a, b, c, d) = (self.f_ext(k - 2), self.f_ext(k - 1), self.f_ext(k + 1), self.f_ext(k + 2));
        let s = 1.0 / (12.0 * self.spacing);
        for m in 0..self.dim {
            out[m] = (a[m] - 8.0 * b[m] + 8.0 * c[m] - d[m]) * s;
        }
    }

    /// Fourth-order central difference `f''` at index `k`.
    pub fn f_second(&self, k: i64, out: &mut [f64]) {
        let (a, b, c, d, e) = (
            self.f_ext(k - 2),
            self.f_ext(k - 1),
            self.f_ext(k),
            self.f_ext(k + 1),
            self.f_ext(k + 2),
        );
        let s = 1.0 / (12.0 * self.spacing * self.spacing);
        for m in 0..self.dim {
            out[m] = (-a[m] + 16.0 * b[m] - 30.0 * c[m] + 16.0 * d[m] - e[m]) * s;
        }
    }

    /// Copy extended by `pad_nodes` constant samples on each side.
    pub fn padded(&self, pad_nodes: usize) -> CauchyData {
        let n = self.len();
        let total = n + 2 * pad_nodes;
        let mut sf = Vec::with_capacity(total * self.dim);
        let mut sg = Vec::with_capacity(total * self.dim);
        let zero = vec![0.0; self.dim];
        for k in 0..total {
            let src = k as i64 - pad_nodes as i64;
            sf.extend_from_slice(self.f_ext(src));
            if src < 0 || src >= n as i64 {
                sg.extend_from_slice(&zero);
            } else {
                sg.extend_from_slice(self.g(src as usize));
            }
        }
        CauchyData {
            x_min: self.x_min - pad_nodes as f64 * self.spacing,
            x_max: self.x_max + pad_nodes as f64 * self.spacing,
            spacing: self.spacing,
            dim: self.dim,
            samples_f: sf,
            samples_g: sg,
        }
    }

    /// Every `step`-th sample starting at index 0.
    pub fn subsample(&self, step: usize) -> Result<CauchyData> {
        if step == 0 || (self.len() - 1) % step != 0 {
            return invalid("subsample step must divide the node count minus one");
        }
        let mut sf = Vec::new();
        let mut sg = Vec::new();
        for k in (0..self.len()).step_by(step) {
            sf.extend_from_slice(self.f(k));
            sg.extend_from_slice(self.g(k));
        }
        CauchyData::new(self.x_min, self.spacing * step as f64, self.dim, sf, sg)
    }

    /// `(1/4) ∫ (|f'|² + |g|²) dx` in the Euclidean chart norm, trapezoid rule.
    pub fn energy(&self) -> f64 {
        let mut fp = vec![0.0; self.dim];
        let mut acc = 0.0;
        for k in 0..self.len() {
            self.f_prime(k as i64, &mut fp);
            let g = self.g(k);
            let dens: f64 = fp.iter().chain(g).map(|a| a * a).sum();
            let w = if k == 0 || k + 1 == self.len() { 0.5 } else { 1.0 };
            acc += w * 0.25 * dens;
        }
        acc * self.spacing
    }
}

/// Characteristic data on the `t = 0` nodes.
#[derive(Debug, Clone)]
pub struct CharacteristicData {
    pub phi: Vec<f64>,
    pub phi_u: Vec<f64>,
    pub phi_v: Vec<f64>,
    pub dim: usize,
}

/// `φ_u = (f' + g) / 2`, `φ_v = (f' - g) / 2` at every data node.
pub fn cauchy_to_characteristic(data: &CauchyData) -> Result<CharacteristicData> {
    if data.len() < 5 {
        return invalid(format!("need at least 5 data nodes, got {}", data.len()));
    }
    let dim = data.dim;
    let n = data.len();
    let mut phi_u = vec![0.0; n * dim];
    let mut phi_v = vec![0.0; n * dim];
    let mut fp = vec![0.0; dim];
    for k in 0..n {
        data.f_prime(k as i64, &mut fp);
        let g = data.g(k);
        for m in 0..dim {
            phi_u[k * dim + m] = 0.5 * (fp[m] + g[m]);
            phi_v[k * dim + m] = 0.5 * (fp[m] - g[m]);
        }
    }
    Ok(CharacteristicData { phi: data.samples_f.clone(), phi_u, phi_v, dim })
}
